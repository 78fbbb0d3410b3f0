#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fracnet::ml {

enum class OutputKind { Logistic, Identity };
enum class LossKind { CrossEntropy, Squared };

struct DivergenceError : std::runtime_error {
    int epoch;
    explicit DivergenceError(int e)
        : std::runtime_error("divergence at epoch " + std::to_string(e)), epoch(e) {}
};

struct TrainSchedule {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 500;
    double val_fraction = 0.1;
    int patience = 25;
    unsigned long seed = 0;
};

struct TrainReport {
    std::vector<double> loss_curve;  // training loss per epoch
    int stopped_epoch = 0;
    int param_count = 0;
    bool capacity_warning = false;   // param count >= training pair count
};

/// Small fully connected net with tanh hidden layers.
/// Hidden layer widths are fixed to 12/8/4 with a single output unit.
class FeedforwardNet {
public:
    FeedforwardNet() = default;

    FeedforwardNet(int input_dim, OutputKind output, unsigned long seed)
        : output_(output) {
        if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
        sizes_ = {input_dim, 12, 8, 4, 1};
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
            const double r = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> u(-r, r);
            weights_.emplace_back(fan_out * fan_in);
            biases_.emplace_back(fan_out, 0.0);
            for (auto& w : weights_.back()) w = u(rng);
        }
    }

    int input_dim() const { return sizes_.front(); }
    OutputKind output_kind() const { return output_; }

    int param_count() const {
        int n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l)
            n += static_cast<int>(weights_[l].size() + biases_[l].size());
        return n;
    }

    double forward(const std::vector<double>& features) const {
        if (static_cast<int>(features.size()) != sizes_.front())
            throw std::invalid_argument("feature dimension mismatch");
        std::vector<double> act = features;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            act = layer_forward(l, act);
            if (l + 1 < weights_.size())
                for (auto& a : act) a = std::tanh(a);
        }
        return output_ == OutputKind::Logistic ? logistic(act[0]) : act[0];
    }

    /// Mean loss and flat gradient over a batch of (features, label) rows.
    std::pair<double, std::vector<double>> loss_and_gradient(
        const std::vector<std::pair<std::vector<double>, double>>& batch,
        LossKind loss) const {
        std::vector<double> grad(param_count(), 0.0);
        double total = 0.0;
        for (const auto& [x, y] : batch) {
            // forward pass keeping pre-activations per layer
            std::vector<std::vector<double>> acts;   // post-activation per layer
            acts.push_back(x);
            std::vector<std::vector<double>> pre;    // pre-activation per layer
            for (std::size_t l = 0; l < weights_.size(); ++l) {
                pre.push_back(layer_forward(l, acts.back()));
                std::vector<double> a = pre.back();
                if (l + 1 < weights_.size())
                    for (auto& v : a) v = std::tanh(v);
                acts.push_back(std::move(a));
            }
            const double z = pre.back()[0];
            double out = output_ == OutputKind::Logistic ? logistic(z) : z;
            double dz;  // d loss / d z at the output unit
            if (loss == LossKind::CrossEntropy) {
                const double eps = 1e-12;
                total += -(y * std::log(out + eps) + (1 - y) * std::log(1 - out + eps));
                dz = out - y;  // logistic + cross-entropy
            } else {
                total += 0.5 * (out - y) * (out - y);
                dz = (out - y) *
                     (output_ == OutputKind::Logistic ? out * (1 - out) : 1.0);
            }
            // backward pass
            std::vector<double> delta{dz};
            for (std::size_t l = weights_.size(); l-- > 0;) {
                const int rows = sizes_[l + 1], cols = sizes_[l];
                double* gw = grad.data() + param_offset(l);
                double* gb = gw + rows * cols;
                for (int r = 0; r < rows; ++r) {
                    gb[r] += delta[r];
                    for (int c = 0; c < cols; ++c)
                        gw[r * cols + c] += delta[r] * acts[l][c];
                }
                if (l == 0) break;
                std::vector<double> prev(cols, 0.0);
                for (int c = 0; c < cols; ++c) {
                    double s = 0.0;
                    for (int r = 0; r < rows; ++r)
                        s += weights_[l][r * cols + c] * delta[r];
                    const double th = std::tanh(pre[l - 1][c]);
                    prev[c] = s * (1.0 - th * th);
                }
                delta = std::move(prev);
            }
        }
        const double inv = 1.0 / static_cast<double>(batch.size());
        total *= inv;
        for (auto& g : grad) g *= inv;
        return {total, grad};
    }

    TrainReport train(const std::vector<std::pair<std::vector<double>, double>>& dataset,
                      LossKind loss, const TrainSchedule& sched) {
        if (dataset.empty()) throw std::invalid_argument("empty dataset");
        if (loss == LossKind::CrossEntropy)
            for (const auto& [x, y] : dataset)
                if (y != 0.0 && y != 1.0)
                    throw std::invalid_argument("cross-entropy labels must be 0/1");

        TrainReport report;
        report.param_count = param_count();
        report.capacity_warning =
            report.param_count >= static_cast<int>(dataset.size());

        std::mt19937_64 rng(sched.seed);
        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        std::size_t n_val = static_cast<std::size_t>(sched.val_fraction * dataset.size());
        if (dataset.size() - n_val < 1) n_val = 0;
        std::vector<std::pair<std::vector<double>, double>> train_set, val_set;
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < n_val ? val_set : train_set).push_back(dataset[order[i]]);

        std::vector<double> velocity(param_count(), 0.0);
        std::vector<double> best_params = flat_params();
        double best_val = std::numeric_limits<double>::infinity();
        int since_best = 0;

        std::vector<std::size_t> idx(train_set.size());
        std::iota(idx.begin(), idx.end(), 0);

        for (int epoch = 0; epoch < sched.epochs; ++epoch) {
            std::shuffle(idx.begin(), idx.end(), rng);
            double epoch_loss = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < idx.size();
                 start += sched.batch_size) {
                std::vector<std::pair<std::vector<double>, double>> batch;
                for (std::size_t i = start;
                     i < std::min(idx.size(), start + sched.batch_size); ++i)
                    batch.push_back(train_set[idx[i]]);
                auto [l, g] = loss_and_gradient(batch, loss);
                if (!std::isfinite(l)) throw DivergenceError(epoch);
                epoch_loss += l;
                ++batches;
                auto params = flat_params();
                for (std::size_t k = 0; k < params.size(); ++k) {
                    velocity[k] = sched.momentum * velocity[k] - sched.learning_rate * g[k];
                    params[k] += velocity[k];
                }
                set_flat_params(params);
            }
            report.loss_curve.push_back(epoch_loss / std::max<std::size_t>(1, batches));
            report.stopped_epoch = epoch;

            const double val_loss =
                val_set.empty() ? report.loss_curve.back()
                                : loss_and_gradient(val_set, loss).first;
            if (!std::isfinite(val_loss)) throw DivergenceError(epoch);
            if (val_loss < best_val) {
                best_val = val_loss;
                best_params = flat_params();
                since_best = 0;
            } else if (++since_best > sched.patience) {
                break;
            }
        }
        set_flat_params(best_params);
        return report;
    }

    std::vector<double> flat_params() const {
        std::vector<double> out;
        out.reserve(param_count());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            out.insert(out.end(), weights_[l].begin(), weights_[l].end());
            out.insert(out.end(), biases_[l].begin(), biases_[l].end());
        }
        return out;
    }

    void set_flat_params(const std::vector<double>& p) {
        if (static_cast<int>(p.size()) != param_count())
            throw std::invalid_argument("parameter vector size mismatch");
        std::size_t off = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            std::copy_n(p.begin() + off, weights_[l].size(), weights_[l].begin());
            off += weights_[l].size();
            std::copy_n(p.begin() + off, biases_[l].size(), biases_[l].begin());
            off += biases_[l].size();
        }
    }

    nlohmann::json to_json() const {
        return {{"format", "fracnet-ffnet-v1"},
                {"sizes", sizes_},
                {"output", output_ == OutputKind::Logistic ? "logistic" : "identity"},
                {"weights", weights_},
                {"biases", biases_}};
    }

    static FeedforwardNet from_json(const nlohmann::json& j) {
        FeedforwardNet net;
        net.sizes_ = j.at("sizes").get<std::vector<int>>();
        net.output_ = j.at("output").get<std::string>() == "logistic"
                          ? OutputKind::Logistic
                          : OutputKind::Identity;
        net.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
        net.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
        return net;
    }

private:
    static double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    std::vector<double> layer_forward(std::size_t l, const std::vector<double>& in) const {
        const int rows = sizes_[l + 1], cols = sizes_[l];
        std::vector<double> out(rows);
        for (int r = 0; r < rows; ++r) {
            double s = biases_[l][r];
            for (int c = 0; c < cols; ++c) s += weights_[l][r * cols + c] * in[c];
            out[r] = s;
        }
        return out;
    }

    int param_offset(std::size_t layer) const {
        int off = 0;
        for (std::size_t l = 0; l < layer; ++l)
            off += static_cast<int>(weights_[l].size() + biases_[l].size());
        return off;
    }

    std::vector<int> sizes_;
    OutputKind output_ = OutputKind::Identity;
    std::vector<std::vector<double>> weights_;  // row-major out x in
    std::vector<std::vector<double>> biases_;
};

}  // namespace fracnet::ml
