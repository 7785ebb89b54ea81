#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cusppinn::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { Sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected network U(x, z; theta): L hidden layers with componentwise
/// activation, final layer a pure linear map with no bias.
///
/// Flat parameter layout (canonical order for serialization, initialization
/// and Jacobian columns): for each hidden layer l = 1..L, the rows of W[l]
/// back to back (row-major), then b[l]; finally the output weights W[L+1].
struct NetworkParams {
    std::vector<int> layer_sizes;  // [input_dim, N_1, ..., N_L, 1]
    std::vector<MatrixXd> weights; // L hidden matrices, then 1 x N_L output map
    std::vector<VectorXd> biases;  // L hidden bias vectors
    Activation activation = Activation::Sigmoid;

    int input_dim() const { return layer_sizes.front(); }
    int depth() const { return static_cast<int>(layer_sizes.size()) - 2; }
    int param_count() const;
};

/// Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer, weights and
/// biases alike, drawn in flat order. Deterministic given seed.
NetworkParams init_params(const std::vector<int>& layer_sizes, uint64_t seed,
                          Activation act = Activation::Sigmoid);

VectorXd flatten(const NetworkParams& p);
void set_flat(NetworkParams& p, const VectorXd& theta);
NetworkParams unflatten(const std::vector<int>& layer_sizes, const VectorXd& theta,
                        Activation act = Activation::Sigmoid);

double forward(const NetworkParams& p, const VectorXd& input);

/// Network output with exact first and second derivatives with respect to the
/// input vector. hess is symmetric, bit-exactly.
struct Jet2 {
    double value = 0.0;
    VectorXd grad;
    MatrixXd hess;
};

/// Linear functional on a Jet2:  s = v*value + dot(g, grad) + <H, hess>.
/// The Hessian seed is a full (not halved) contraction, so off-diagonal
/// sensitivities must be split across the symmetric pair by the caller.
struct JetSeeds {
    double v = 0.0;
    VectorXd g;
    MatrixXd H;
};

/// Reusable per-evaluation storage; one instance per thread.
class JetWorkspace {
public:
    void resize(const NetworkParams& p);

    // forward tapes (per hidden layer)
    std::vector<VectorXd> act, sp, spp, sppp;
    std::vector<MatrixXd> Ja, Ha; // pre-activation input-jets: N_l x D, N_l x D^2
    std::vector<MatrixXd> J, H;   // post-activation input-jets
    // backward scratch
    VectorXd vbar, abar, vbar_prev;
    MatrixXd Jbar, Hbar, Jabar, Habar, Jbar_prev, Hbar_prev;
    VectorXd input;
    Jet2 jet;

    int width = 0; // D = layer_sizes[0]
};

/// Evaluates the jet at `input` leaving the full tape in `ws` (required by
/// backward_param_gradient). ws.jet holds the result.
void forward_jet_ws(const NetworkParams& p, const VectorXd& input, JetWorkspace& ws);

Jet2 forward_jet(const NetworkParams& p, const VectorXd& input);

/// Gradient with respect to theta (flat order) of the scalar
/// seeds.v*value + seeds.g . grad + <seeds.H, hess>, computed by a reverse
/// sweep over the tape left in ws by forward_jet_ws. Exact.
void backward_param_gradient(const NetworkParams& p, const JetWorkspace& ws,
                             const JetSeeds& seeds, VectorXd& grad_out);

/// Exact derivative of every jet component with respect to every parameter.
struct JetSensitivities {
    VectorXd d_value;     // N_theta
    MatrixXd d_grad;      // D x N_theta
    MatrixXd d_hess_flat; // D*D x N_theta; row i*D+j is d hess(i,j) / d theta
};

std::pair<Jet2, JetSensitivities> param_jacobian_of_jet(const NetworkParams& p,
                                                        const VectorXd& input);

/// Binary serialization; round-trips bit-exactly. JSON form is human readable.
void save_binary(const NetworkParams& p, const std::string& path);
NetworkParams load_binary(const std::string& path);
std::string to_json_string(const NetworkParams& p);
NetworkParams from_json_string(const std::string& text);

} // namespace cusppinn::net
