#include "cusppinn/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "cusppinn/errors.hpp"
#include "cusppinn/rng.hpp"

namespace cusppinn::net {

namespace {

void check_layer_sizes(const std::vector<int>& ls) {
    if (ls.size() < 3)
        throw config_error("layer_sizes needs at least [input, hidden, 1]");
    for (int n : ls)
        if (n < 1) throw config_error("layer_sizes entries must be positive");
    if (ls.back() != 1) throw config_error("output layer size must be 1");
}

void check_input(const NetworkParams& p, const VectorXd& input) {
    if (input.size() != p.input_dim())
        throw dimension_error("input length " + std::to_string(input.size()) +
                              " does not match network input dim " +
                              std::to_string(p.input_dim()));
}

// Numerically stable sigmoid and its first three derivatives.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
    }
    return "sigmoid";
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    throw config_error("unknown activation '" + name + "'");
}

int NetworkParams::param_count() const {
    const int L = depth();
    int n = layer_sizes[L]; // output weights
    for (int l = 1; l <= L; ++l)
        n += (layer_sizes[l - 1] + 1) * layer_sizes[l];
    return n;
}

NetworkParams init_params(const std::vector<int>& layer_sizes, uint64_t seed,
                          Activation act) {
    check_layer_sizes(layer_sizes);
    NetworkParams p;
    p.layer_sizes = layer_sizes;
    p.activation = act;
    const int L = p.depth();
    Rng rng(seed);
    for (int l = 1; l <= L; ++l) {
        const int rows = layer_sizes[l], cols = layer_sizes[l - 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        MatrixXd W(rows, cols);
        for (int k = 0; k < rows; ++k)
            for (int j = 0; j < cols; ++j) W(k, j) = rng.uniform(-bound, bound);
        VectorXd b(rows);
        for (int k = 0; k < rows; ++k) b(k) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(W));
        p.biases.push_back(std::move(b));
    }
    const int nl = layer_sizes[L];
    const double bound = 1.0 / std::sqrt(static_cast<double>(nl));
    MatrixXd Wout(1, nl);
    for (int j = 0; j < nl; ++j) Wout(0, j) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(Wout));
    return p;
}

VectorXd flatten(const NetworkParams& p) {
    VectorXd theta(p.param_count());
    Eigen::Index off = 0;
    const int L = p.depth();
    for (int l = 0; l < L; ++l) {
        const MatrixXd& W = p.weights[l];
        for (Eigen::Index k = 0; k < W.rows(); ++k) {
            theta.segment(off, W.cols()) = W.row(k);
            off += W.cols();
        }
        theta.segment(off, p.biases[l].size()) = p.biases[l];
        off += p.biases[l].size();
    }
    theta.segment(off, p.weights[L].cols()) = p.weights[L].row(0);
    return theta;
}

void set_flat(NetworkParams& p, const VectorXd& theta) {
    if (theta.size() != p.param_count())
        throw dimension_error("flat vector has wrong length");
    Eigen::Index off = 0;
    const int L = p.depth();
    for (int l = 0; l < L; ++l) {
        MatrixXd& W = p.weights[l];
        for (Eigen::Index k = 0; k < W.rows(); ++k) {
            W.row(k) = theta.segment(off, W.cols());
            off += W.cols();
        }
        p.biases[l] = theta.segment(off, p.biases[l].size());
        off += p.biases[l].size();
    }
    p.weights[L].row(0) = theta.segment(off, p.weights[L].cols());
}

NetworkParams unflatten(const std::vector<int>& layer_sizes, const VectorXd& theta,
                        Activation act) {
    check_layer_sizes(layer_sizes);
    NetworkParams p;
    p.layer_sizes = layer_sizes;
    p.activation = act;
    const int L = p.depth();
    for (int l = 1; l <= L; ++l) {
        p.weights.emplace_back(layer_sizes[l], layer_sizes[l - 1]);
        p.biases.emplace_back(layer_sizes[l]);
    }
    p.weights.emplace_back(1, layer_sizes[L]);
    set_flat(p, theta);
    return p;
}

double forward(const NetworkParams& p, const VectorXd& input) {
    check_input(p, input);
    const int L = p.depth();
    // same operation sequence as forward_jet_ws so the two values agree bitwise
    VectorXd v = input, a;
    for (int l = 0; l < L; ++l) {
        a.noalias() = p.weights[l] * v;
        a += p.biases[l];
        v.resize(a.size());
        for (Eigen::Index k = 0; k < a.size(); ++k) v(k) = sigmoid(a(k));
    }
    return p.weights[L].row(0).dot(v);
}

void JetWorkspace::resize(const NetworkParams& p) {
    const int L = p.depth();
    const int D = p.input_dim();
    width = D;
    act.resize(L);
    sp.resize(L);
    spp.resize(L);
    sppp.resize(L);
    Ja.resize(L);
    Ha.resize(L);
    J.resize(L);
    H.resize(L);
    int maxn = D;
    for (int l = 1; l <= L; ++l) {
        const int n = p.layer_sizes[l];
        maxn = std::max(maxn, n);
        act[l - 1].resize(n);
        sp[l - 1].resize(n);
        spp[l - 1].resize(n);
        sppp[l - 1].resize(n);
        Ja[l - 1].resize(n, D);
        Ha[l - 1].resize(n, D * D);
        J[l - 1].resize(n, D);
        H[l - 1].resize(n, D * D);
    }
    vbar.resize(maxn);
    abar.resize(maxn);
    vbar_prev.resize(maxn);
    Jbar.resize(maxn, D);
    Hbar.resize(maxn, D * D);
    Jabar.resize(maxn, D);
    Habar.resize(maxn, D * D);
    Jbar_prev.resize(maxn, D);
    Hbar_prev.resize(maxn, D * D);
    input.resize(D);
    jet.grad.resize(D);
    jet.hess.resize(D, D);
}

void forward_jet_ws(const NetworkParams& p, const VectorXd& in, JetWorkspace& ws) {
    check_input(p, in);
    const int L = p.depth();
    const int D = p.input_dim();
    if (ws.width != D || ws.act.size() != static_cast<size_t>(L)) ws.resize(p);
    ws.input = in;

    for (int l = 0; l < L; ++l) {
        const MatrixXd& W = p.weights[l];
        const int n = static_cast<int>(W.rows());
        VectorXd& a = ws.act[l]; // pre-activation, overwritten by activation below
        if (l == 0) {
            a.noalias() = W * in;
            a += p.biases[l];
            ws.Ja[l] = W;            // J of layer 0 is the identity
            ws.Ha[l].setZero();      // H of layer 0 is zero
        } else {
            a.noalias() = W * ws.act[l - 1];
            a += p.biases[l];
            ws.Ja[l].noalias() = W * ws.J[l - 1];
            ws.Ha[l].noalias() = W * ws.H[l - 1];
            // the GEMM may round identical columns differently depending on
            // their packet position; re-impose bitwise row symmetry from the
            // upper-triangle representative
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < D; ++i)
                    for (int j = i + 1; j < D; ++j)
                        ws.Ha[l](k, j * D + i) = ws.Ha[l](k, i * D + j);
        }
        for (int k = 0; k < n; ++k) {
            const double s = sigmoid(a(k));
            const double d1 = s * (1.0 - s);
            const double d2 = d1 * (1.0 - 2.0 * s);
            const double d3 = d1 * (1.0 - 6.0 * s + 6.0 * s * s);
            a(k) = s; // act now stores the activation value
            ws.sp[l](k) = d1;
            ws.spp[l](k) = d2;
            ws.sppp[l](k) = d3;
        }
        ws.J[l] = ws.sp[l].asDiagonal() * ws.Ja[l];
        if (l == 0) {
            // H = spp * vec(Ja_k Ja_k^T); Ha is zero at the first layer
            for (int k = 0; k < n; ++k) {
                const auto row = ws.Ja[l].row(k);
                for (int i = 0; i < D; ++i)
                    for (int j = 0; j < D; ++j)
                        ws.H[l](k, i * D + j) = ws.spp[l](k) * row(i) * row(j);
            }
        } else {
            for (int k = 0; k < n; ++k) {
                const auto row = ws.Ja[l].row(k);
                const double c1 = ws.sp[l](k), c2 = ws.spp[l](k);
                for (int i = 0; i < D; ++i)
                    for (int j = 0; j < D; ++j)
                        ws.H[l](k, i * D + j) =
                            c1 * ws.Ha[l](k, i * D + j) + c2 * row(i) * row(j);
            }
        }
    }

    const auto wout = p.weights[L].row(0);
    ws.jet.value = wout.dot(ws.act[L - 1]);
    ws.jet.grad.noalias() = ws.J[L - 1].transpose() * wout.transpose();
    VectorXd hvec = ws.H[L - 1].transpose() * wout.transpose();
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j)
            ws.jet.hess(i, j) = ws.jet.hess(j, i) = hvec(i * D + j);
}

Jet2 forward_jet(const NetworkParams& p, const VectorXd& input) {
    JetWorkspace ws;
    forward_jet_ws(p, input, ws);
    return ws.jet;
}

void backward_param_gradient(const NetworkParams& p, const JetWorkspace& ws,
                             const JetSeeds& seeds, VectorXd& grad_out) {
    const int L = p.depth();
    const int D = ws.width;
    const int ntheta = p.param_count();
    if (grad_out.size() != ntheta) grad_out.resize(ntheta);

    // flat offsets per hidden layer
    std::vector<Eigen::Index> off(L + 1);
    Eigen::Index o = 0;
    for (int l = 0; l < L; ++l) {
        off[l] = o;
        o += (p.layer_sizes[l] + 1) * p.layer_sizes[l + 1];
    }
    off[L] = o; // output weights

    // seed the hessian contraction as a flat row vector; hess is symmetric so
    // only the symmetric part of the seed matters, and symmetrizing here keeps
    // the (Mbar + Mbar^T) Ja term below equal to 2 Mbar Ja
    VectorXd Hseed(D * D);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
            Hseed(i * D + j) = 0.5 * (seeds.H(i, j) + seeds.H(j, i));

    const auto wout = p.weights[L].row(0);
    const int nL = p.layer_sizes[L];

    // output layer parameter gradient: d s / d w_k
    {
        auto g = grad_out.segment(off[L], nL);
        g = seeds.v * ws.act[L - 1];
        g.noalias() += ws.J[L - 1] * seeds.g;
        g.noalias() += ws.H[L - 1] * Hseed;
    }

    // adjoints of the top hidden layer outputs
    Eigen::VectorXd vbar = seeds.v * wout.transpose();
    Eigen::MatrixXd Jbar = wout.transpose() * seeds.g.transpose();   // nL x D
    Eigen::MatrixXd Hbar = wout.transpose() * Hseed.transpose();     // nL x D^2

    for (int l = L - 1; l >= 0; --l) {
        const int n = p.layer_sizes[l + 1];
        const MatrixXd& W = p.weights[l];

        Eigen::VectorXd abar(n);
        Eigen::MatrixXd Jabar(n, D), Habar(n, D * D);
        Eigen::VectorXd mj(D); // (Mbar_k Ja_k), Mbar_k = reshape of Hbar row k
        for (int k = 0; k < n; ++k) {
            const double c1 = ws.sp[l](k), c2 = ws.spp[l](k), c3 = ws.sppp[l](k);
            const auto Jak = ws.Ja[l].row(k);
            const auto Hak = ws.Ha[l].row(k);
            const auto Jbk = Jbar.row(k);
            const auto Hbk = Hbar.row(k);

            // contraction terms of the pre-activation adjoint
            const double jdot = Jbk.dot(Jak);
            const double hdot = (l == 0) ? 0.0 : Hbk.dot(Hak);
            double odot = 0.0; // <Mbar_k, Ja_k Ja_k^T>
            for (int i = 0; i < D; ++i) {
                double acc = 0.0;
                for (int j = 0; j < D; ++j) acc += Hbk(i * D + j) * Jak(j);
                mj(i) = acc;
                odot += Jak(i) * acc;
            }
            abar(k) = c1 * vbar(k) + c2 * (jdot + hdot) + c3 * odot;
            for (int i = 0; i < D; ++i)
                Jabar(k, i) = c1 * Jbk(i) + 2.0 * c2 * mj(i);
            Habar.row(k) = c1 * Hbk;
        }

        // parameter gradients of this layer, written in flat order
        const int ncols = p.layer_sizes[l];
        {
            Eigen::MatrixXd Wbar;
            if (l == 0) {
                Wbar.noalias() = abar * ws.input.transpose();
                Wbar.noalias() += Jabar; // Jprev is the identity, Hprev is zero
            } else {
                Wbar.noalias() = abar * ws.act[l - 1].transpose();
                Wbar.noalias() += Jabar * ws.J[l - 1].transpose();
                Wbar.noalias() += Habar * ws.H[l - 1].transpose();
            }
            Eigen::Index pos = off[l];
            for (int k = 0; k < n; ++k) {
                grad_out.segment(pos, ncols) = Wbar.row(k);
                pos += ncols;
            }
            grad_out.segment(pos, n) = abar;
        }

        if (l > 0) {
            vbar.noalias() = W.transpose() * abar;
            Jbar = W.transpose() * Jabar;
            Hbar = W.transpose() * Habar;
        }
    }
}

std::pair<Jet2, JetSensitivities> param_jacobian_of_jet(const NetworkParams& p,
                                                        const VectorXd& input) {
    JetWorkspace ws;
    forward_jet_ws(p, input, ws);
    const int D = p.input_dim();
    const int nt = p.param_count();

    JetSensitivities s;
    s.d_value.resize(nt);
    s.d_grad.resize(D, nt);
    s.d_hess_flat.resize(D * D, nt);

    JetSeeds seeds;
    seeds.g = VectorXd::Zero(D);
    seeds.H = MatrixXd::Zero(D, D);
    VectorXd row(nt);

    seeds.v = 1.0;
    backward_param_gradient(p, ws, seeds, row);
    s.d_value = row;
    seeds.v = 0.0;

    for (int i = 0; i < D; ++i) {
        seeds.g(i) = 1.0;
        backward_param_gradient(p, ws, seeds, row);
        s.d_grad.row(i) = row;
        seeds.g(i) = 0.0;
    }
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) {
            // seed the symmetric pair with half each so <H, hess> isolates hess(i,j)
            const double w = (i == j) ? 1.0 : 0.5;
            seeds.H(i, j) = w;
            seeds.H(j, i) = w;
            backward_param_gradient(p, ws, seeds, row);
            s.d_hess_flat.row(i * D + j) = row;
            if (i != j) s.d_hess_flat.row(j * D + i) = row;
            seeds.H(i, j) = 0.0;
            seeds.H(j, i) = 0.0;
        }
    return {ws.jet, s};
}

namespace {
constexpr char kMagic[8] = {'C', 'P', 'N', 'N', '0', '0', '0', '1'};
}

void save_binary(const NetworkParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const uint32_t act = static_cast<uint32_t>(p.activation);
    const uint32_t nlayers = static_cast<uint32_t>(p.layer_sizes.size());
    out.write(reinterpret_cast<const char*>(&act), sizeof(act));
    out.write(reinterpret_cast<const char*>(&nlayers), sizeof(nlayers));
    for (int n : p.layer_sizes) {
        const int64_t v = n;
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    const VectorXd theta = flatten(p);
    out.write(reinterpret_cast<const char*>(theta.data()),
              static_cast<std::streamsize>(sizeof(double) * theta.size()));
}

NetworkParams load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw config_error("'" + path + "' is not a network parameter file");
    uint32_t act = 0, nlayers = 0;
    in.read(reinterpret_cast<char*>(&act), sizeof(act));
    in.read(reinterpret_cast<char*>(&nlayers), sizeof(nlayers));
    std::vector<int> sizes(nlayers);
    for (auto& s : sizes) {
        int64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        s = static_cast<int>(v);
    }
    check_layer_sizes(sizes);
    NetworkParams tmp;
    tmp.layer_sizes = sizes;
    VectorXd theta(tmp.param_count());
    in.read(reinterpret_cast<char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(double) * theta.size()));
    if (!in) throw config_error("truncated parameter file '" + path + "'");
    return unflatten(sizes, theta, static_cast<Activation>(act));
}

std::string to_json_string(const NetworkParams& p) {
    nlohmann::json j;
    j["layer_sizes"] = p.layer_sizes;
    j["activation"] = activation_name(p.activation);
    const VectorXd theta = flatten(p);
    j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
    return j.dump();
}

NetworkParams from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto th = j.at("theta").get<std::vector<double>>();
    VectorXd theta = Eigen::Map<const VectorXd>(th.data(), th.size());
    return unflatten(sizes, theta, activation_from_name(j.at("activation")));
}

} // namespace cusppinn::net
