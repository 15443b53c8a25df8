#include "rlapps/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/checkpoint.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"

namespace ranopt::rlapps {

void DqnConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error("rlapps", m); };
    if (!(gamma >= 0.0 && gamma <= 1.0)) bad("gamma must lie in [0, 1]");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) bad("alpha must be positive");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (initial_explore_steps < 0) bad("initial_explore_steps must be >= 0");
    if (target_sync_every < 1) bad("target_sync_every must be >= 1");
    if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= 1.0))
        bad("epsilon bounds must lie in [0, 1]");
    if (epsilon.decay_steps < 0) bad("epsilon decay_steps must be >= 0");
    if (buffer_capacity < static_cast<std::size_t>(batch_size)) bad("buffer_capacity must be >= batch_size");
    if (hidden_dims.empty()) bad("hidden_dims must not be empty");
    for (int h : hidden_dims)
        if (h < 1) bad("hidden layer widths must be >= 1");
    if (train_every < 1) bad("train_every must be >= 1");
}

double DqnConfig::epsilon_at(long step) const {
    if (step < initial_explore_steps) return 1.0;
    const long k = step - initial_explore_steps;
    if (epsilon.decay_steps == 0 || k >= epsilon.decay_steps) return epsilon.end;
    const double f = static_cast<double>(k) / static_cast<double>(epsilon.decay_steps);
    return epsilon.start + (epsilon.end - epsilon.start) * f;
}

nlohmann::json to_json(const DqnConfig& c) {
    return {{"gamma", c.gamma},
            {"alpha", c.alpha},
            {"batch_size", c.batch_size},
            {"initial_explore_steps", c.initial_explore_steps},
            {"target_sync_every", c.target_sync_every},
            {"epsilon", {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"decay_steps", c.epsilon.decay_steps}}},
            {"buffer_capacity", c.buffer_capacity},
            {"hidden_dims", c.hidden_dims},
            {"grad_clip", c.grad_clip},
            {"train_every", c.train_every},
            {"seed", c.seed}};
}

DqnConfig dqn_from_json(const nlohmann::json& j, DqnConfig c) {
    if (!j.is_object()) throw Error("rlapps", "dqn config must be an object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& k = it.key();
            const auto& v = it.value();
            if (k == "gamma") c.gamma = v.get<double>();
            else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "batch_size") c.batch_size = v.get<int>();
            else if (k == "initial_explore_steps") c.initial_explore_steps = v.get<long>();
            else if (k == "target_sync_every") c.target_sync_every = v.get<long>();
            else if (k == "buffer_capacity") c.buffer_capacity = v.get<std::size_t>();
            else if (k == "hidden_dims") c.hidden_dims = v.get<std::vector<int>>();
            else if (k == "grad_clip") c.grad_clip = v.get<double>();
            else if (k == "train_every") c.train_every = v.get<int>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "epsilon") {
                if (!v.is_object()) throw Error("rlapps", "epsilon must be an object");
                for (auto e = v.begin(); e != v.end(); ++e) {
                    if (e.key() == "start") c.epsilon.start = e.value().get<double>();
                    else if (e.key() == "end") c.epsilon.end = e.value().get<double>();
                    else if (e.key() == "decay_steps") c.epsilon.decay_steps = e.value().get<long>();
                    else throw Error("rlapps", "unknown key epsilon." + e.key());
                }
            } else {
                throw Error("rlapps", "unknown dqn key " + k);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("rlapps", std::string("bad dqn config value: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------- QNetwork

QNetwork::QNetwork(int state_dim, int num_actions, const std::vector<int>& hidden, std::uint64_t seed)
    : state_dim_(state_dim), num_actions_(num_actions) {
    if (state_dim < 1 || num_actions < 1) throw Error("rlapps", "Q-network needs positive state and action sizes");
    int in = state_dim;
    for (std::size_t i = 0; i <= hidden.size(); ++i) {
        const int out = i < hidden.size() ? hidden[i] : num_actions;
        layers_.push_back(forecast::Linear::make(ps_, "fc" + std::to_string(i), in, out));
        in = out;
    }
    Rng rng(seed);
    for (const auto& l : layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(ps_[l.w].value.rows()));
        for (int idx : {l.w, l.b}) {
            auto& v = ps_[idx].value;
            for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = (2.0 * uniform_open0(rng) - 1.0) * bound;
        }
    }
}

Mat QNetwork::forward(const Mat& states) const {
    if (states.cols() != state_dim_) throw Error("rlapps", "state dimension does not match the Q-network");
    Mat h = states;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].forward(ps_, h);
        if (i + 1 < layers_.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

std::vector<double> QNetwork::q_values(std::span<const double> state) const {
    Mat x(1, static_cast<Eigen::Index>(state.size()));
    for (std::size_t i = 0; i < state.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = state[i];
    const Mat q = forward(x);
    return {q.data(), q.data() + q.size()};
}

double QNetwork::fit(const Mat& states, std::span<const int> actions, std::span<const double> targets,
                     forecast::Adam& opt, double grad_clip) {
    const Eigen::Index B = states.rows();
    if (B == 0 || static_cast<std::size_t>(B) != actions.size() || actions.size() != targets.size())
        throw Error("rlapps", "fit: batch sizes disagree");
    std::vector<Mat> acts;  // input of each layer
    Mat h = states;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        acts.push_back(h);
        h = layers_[i].forward(ps_, h);
        if (i + 1 < layers_.size()) h = h.cwiseMax(0.0);
    }
    Mat dq = Mat::Zero(B, num_actions_);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < B; ++r) {
        const int a = actions[static_cast<std::size_t>(r)];
        if (a < 0 || a >= num_actions_) throw Error("rlapps", "action index out of range");
        const double e = h(r, a) - targets[static_cast<std::size_t>(r)];
        loss += e * e;
        dq(r, a) = 2.0 * e / static_cast<double>(B);
    }
    loss /= static_cast<double>(B);

    ps_.zero_grad();
    Mat d = dq;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        d = layers_[i].backward(ps_, acts[i], d);
        if (i > 0) d = d.cwiseProduct((acts[i].array() > 0.0).cast<double>().matrix());
    }
    if (grad_clip > 0.0) forecast::clip_gradients(ps_, grad_clip);
    try {
        opt.step(ps_);
    } catch (const Error& e) {
        throw NumericError("rlapps", std::string("Q-network diverged (") + e.what() + ")");
    }
    return loss;
}

void QNetwork::copy_from(const QNetwork& other) {
    if (other.ps_.size() != ps_.size()) throw Error("rlapps", "Q-network shapes differ");
    for (std::size_t i = 0; i < ps_.size(); ++i) {
        if (other.ps_[static_cast<int>(i)].value.rows() != ps_[static_cast<int>(i)].value.rows() ||
            other.ps_[static_cast<int>(i)].value.cols() != ps_[static_cast<int>(i)].value.cols())
            throw Error("rlapps", "Q-network shapes differ");
        ps_[static_cast<int>(i)].value = other.ps_[static_cast<int>(i)].value;
    }
}

// ---------------------------------------------------------------- acting

int greedy_action(std::span<const double> q, std::span<const std::uint8_t> valid) {
    int best = -1;
    double bv = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q.size(); ++a) {
        if (!valid.empty() && !valid[a]) continue;
        if (best < 0 || q[a] > bv) {
            best = static_cast<int>(a);
            bv = q[a];
        }
    }
    if (best < 0) throw Error("rlapps", "no valid action");
    return best;
}

namespace {

int uniform_valid(std::size_t n, std::span<const std::uint8_t> valid, Rng& rng) {
    std::size_t count = n;
    if (!valid.empty()) count = static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
    if (count == 0) throw Error("rlapps", "no valid action");
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    std::size_t k = pick(rng);
    if (valid.empty()) return static_cast<int>(k);
    for (std::size_t a = 0; a < n; ++a)
        if (valid[a] && k-- == 0) return static_cast<int>(a);
    return -1; // unreachable
}

} // namespace

int select_action(std::span<const double> q, long step, const DqnConfig& cfg, Rng& rng,
                  std::span<const std::uint8_t> valid) {
    if (!valid.empty() && valid.size() != q.size()) throw Error("rlapps", "action mask size mismatch");
    if (step < cfg.initial_explore_steps) return uniform_valid(q.size(), valid, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < cfg.epsilon_at(step)) return uniform_valid(q.size(), valid, rng);
    return greedy_action(q, valid);
}

int act(const QNetwork& qnet, std::span<const double> state, long step, const DqnConfig& cfg, Rng& rng,
        std::span<const std::uint8_t> valid) {
    if (static_cast<int>(state.size()) != qnet.state_dim()) throw Error("rlapps", "state dimension does not match the Q-network");
    const auto q = qnet.q_values(state);
    return select_action(q, step, cfg, rng, valid);
}

std::vector<double> td_targets(std::span<const Transition> batch, const QNetwork& target, double gamma) {
    if (batch.empty()) throw Error("rlapps", "td_targets on an empty batch");
    std::vector<double> y(batch.size());
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        y[i] = batch[i].reward;
        if (!batch[i].terminal && gamma != 0.0) live.push_back(i);
    }
    if (live.empty()) return y;
    Mat s2(static_cast<Eigen::Index>(live.size()), target.state_dim());
    for (std::size_t r = 0; r < live.size(); ++r) {
        const auto& ns = batch[live[r]].next_state;
        if (static_cast<int>(ns.size()) != target.state_dim()) throw Error("rlapps", "next_state dimension mismatch");
        for (std::size_t c = 0; c < ns.size(); ++c) s2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ns[c];
    }
    const Mat q2 = target.forward(s2);
    for (std::size_t r = 0; r < live.size(); ++r) {
        const auto& t = batch[live[r]];
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < q2.cols(); ++a) {
            if (!t.next_valid.empty() && !t.next_valid[static_cast<std::size_t>(a)]) continue;
            m = std::max(m, q2(static_cast<Eigen::Index>(r), a));
        }
        if (!std::isfinite(m)) throw Error("rlapps", "next state has no valid action");
        y[live[r]] = t.reward + gamma * m;
    }
    return y;
}

// ---------------------------------------------------------------- replay

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int num_actions)
    : capacity_(capacity), sdim_(state_dim), nact_(num_actions) {
    if (capacity == 0) throw Error("rlapps", "replay capacity must be positive");
    s_.resize(capacity * static_cast<std::size_t>(sdim_));
    s2_.resize(capacity * static_cast<std::size_t>(sdim_));
    r_.resize(capacity);
    a_.resize(capacity);
    term_.resize(capacity);
    has_valid_.resize(capacity);
    valid_.resize(capacity * static_cast<std::size_t>(nact_));
}

void ReplayBuffer::push(const Transition& t) {
    if (static_cast<int>(t.state.size()) != sdim_ || static_cast<int>(t.next_state.size()) != sdim_)
        throw Error("rlapps", "transition state dimension mismatch");
    if (t.action < 0 || t.action >= nact_) throw Error("rlapps", "transition action out of range");
    if (!t.next_valid.empty() && static_cast<int>(t.next_valid.size()) != nact_)
        throw Error("rlapps", "transition action mask size mismatch");
    if (!std::isfinite(t.reward)) throw NumericError("rlapps", "non-finite reward");
    for (double v : t.state)
        if (!std::isfinite(v)) throw Error("rlapps", "non-finite state entry");
    for (double v : t.next_state)
        if (!std::isfinite(v)) throw Error("rlapps", "non-finite next-state entry");

    const std::size_t slot = (head_ + size_) % capacity_;
    if (size_ == capacity_) head_ = (head_ + 1) % capacity_; // overwrite the oldest
    else ++size_;
    const std::size_t sd = static_cast<std::size_t>(sdim_);
    std::copy(t.state.begin(), t.state.end(), s_.begin() + static_cast<std::ptrdiff_t>(slot * sd));
    std::copy(t.next_state.begin(), t.next_state.end(), s2_.begin() + static_cast<std::ptrdiff_t>(slot * sd));
    r_[slot] = t.reward;
    a_[slot] = t.action;
    term_[slot] = t.terminal ? 1 : 0;
    has_valid_[slot] = t.next_valid.empty() ? 0 : 1;
    if (!t.next_valid.empty())
        std::copy(t.next_valid.begin(), t.next_valid.end(),
                  valid_.begin() + static_cast<std::ptrdiff_t>(slot * static_cast<std::size_t>(nact_)));
}

Transition ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw Error("rlapps", "replay index out of range");
    const std::size_t slot = (head_ + i) % capacity_;
    const std::size_t sd = static_cast<std::size_t>(sdim_);
    Transition t;
    t.state.assign(s_.begin() + static_cast<std::ptrdiff_t>(slot * sd), s_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * sd));
    t.next_state.assign(s2_.begin() + static_cast<std::ptrdiff_t>(slot * sd),
                        s2_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * sd));
    t.reward = r_[slot];
    t.action = a_[slot];
    t.terminal = term_[slot] != 0;
    if (has_valid_[slot]) {
        const std::size_t na = static_cast<std::size_t>(nact_);
        t.next_valid.assign(valid_.begin() + static_cast<std::ptrdiff_t>(slot * na),
                            valid_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * na));
    }
    return t;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (size_ == 0) throw Error("rlapps", "sampling an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(pick(rng)));
    return out;
}

std::optional<double> train_step(QNetwork& online, QNetwork& target, const ReplayBuffer& buffer, const DqnConfig& cfg,
                                 forecast::Adam& opt, Rng& rng, long& updates) {
    if (buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return std::nullopt;
    const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
    const auto y = td_targets(batch, target, cfg.gamma);
    Mat s(static_cast<Eigen::Index>(batch.size()), online.state_dim());
    std::vector<int> a(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        for (std::size_t c = 0; c < batch[r].state.size(); ++c)
            s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = batch[r].state[c];
        a[r] = batch[r].action;
    }
    const double loss = online.fit(s, a, y, opt, cfg.grad_clip);
    ++updates;
    if (updates % cfg.target_sync_every == 0) target.copy_from(online);
    return loss;
}

// ---------------------------------------------------------------- agent

DqnAgent::DqnAgent(int state_dim, int num_actions, DqnConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      online_(state_dim, num_actions, cfg_.hidden_dims, derive_seed(cfg_.seed, {1})),
      target_(state_dim, num_actions, cfg_.hidden_dims, derive_seed(cfg_.seed, {1})),
      buffer_(cfg_.buffer_capacity, state_dim, num_actions),
      opt_(cfg_.alpha),
      act_rng_(derive_seed(cfg_.seed, {2})),
      sample_rng_(derive_seed(cfg_.seed, {3})) {}

int DqnAgent::act(std::span<const double> state, std::span<const std::uint8_t> valid) {
    return rlapps::act(online_, state, steps_, cfg_, act_rng_, valid);
}

int DqnAgent::greedy(std::span<const double> state, std::span<const std::uint8_t> valid) const {
    return greedy_action(online_.q_values(state), valid);
}

std::vector<int> DqnAgent::act_batch(const Mat& states, const std::vector<std::vector<std::uint8_t>>& valid, bool explore) {
    std::vector<int> out(static_cast<std::size_t>(states.rows()));
    if (states.rows() == 0) return out;
    const Mat q = online_.forward(states);
    std::vector<double> row(static_cast<std::size_t>(q.cols()));
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        for (Eigen::Index c = 0; c < q.cols(); ++c) row[static_cast<std::size_t>(c)] = q(r, c);
        std::span<const std::uint8_t> m;
        if (!valid.empty()) m = valid[static_cast<std::size_t>(r)];
        out[static_cast<std::size_t>(r)] = explore ? select_action(row, steps_, cfg_, act_rng_, m) : greedy_action(row, m);
    }
    return out;
}

void DqnAgent::observe(const Transition& t) {
    buffer_.push(t);
    ++steps_;
    if (steps_ % cfg_.train_every == 0) train_step();
}

std::optional<double> DqnAgent::train_step() {
    auto l = rlapps::train_step(online_, target_, buffer_, cfg_, opt_, sample_rng_, updates_);
    if (l) {
        loss_sum_ += *l;
        ++loss_n_;
    }
    return l;
}

double DqnAgent::take_mean_loss() {
    const double m = loss_n_ > 0 ? loss_sum_ / static_cast<double>(loss_n_) : std::numeric_limits<double>::quiet_NaN();
    loss_sum_ = 0.0;
    loss_n_ = 0;
    return m;
}

void DqnAgent::save(const std::string& path, const std::string& app) const {
    Checkpoint ck;
    ck.kind = "dqn_agent";
    ck.meta = {{"app", app},
               {"state_dim", state_dim()},
               {"num_actions", num_actions()},
               {"config", to_json(cfg_)},
               {"steps", steps_},
               {"updates", updates_}};
    for (const auto* net : {&online_, &target_}) {
        const std::string prefix = net == &online_ ? "online." : "target.";
        for (const auto& p : net->params().all()) {
            NamedTensor t{prefix + p.name, static_cast<std::size_t>(p.value.rows()), static_cast<std::size_t>(p.value.cols()), {}};
            t.data.assign(p.value.data(), p.value.data() + p.value.size());
            ck.tensors.push_back(std::move(t));
        }
    }
    save_checkpoint(path, ck);
}

DqnAgent DqnAgent::load(const std::string& path, const std::string& app) {
    const Checkpoint ck = load_checkpoint(path, "dqn_agent");
    try {
        if (ck.meta.at("app").get<std::string>() != app)
            throw Error("rlapps", path + " holds the " + ck.meta.at("app").get<std::string>() + " agent, expected " + app);
        DqnAgent ag(ck.meta.at("state_dim").get<int>(), ck.meta.at("num_actions").get<int>(),
                    dqn_from_json(ck.meta.at("config")));
        ag.steps_ = ck.meta.at("steps").get<long>();
        ag.updates_ = ck.meta.at("updates").get<long>();
        for (auto* net : {&ag.online_, &ag.target_}) {
            const std::string prefix = net == &ag.online_ ? "online." : "target.";
            for (auto& p : net->params().all()) {
                const auto& t = ck.tensor(prefix + p.name);
                if (t.rows != static_cast<std::size_t>(p.value.rows()) || t.cols != static_cast<std::size_t>(p.value.cols()))
                    throw Error("rlapps", "checkpoint tensor " + prefix + p.name + " has the wrong shape");
                std::copy(t.data.begin(), t.data.end(), p.value.data());
            }
        }
        return ag;
    } catch (const nlohmann::json::exception& e) {
        throw Error("rlapps", "malformed agent checkpoint " + path + ": " + e.what());
    }
}

void write_reward_csv(const std::string& path, const std::vector<EpisodeRecord>& rows) {
    csv::Writer w(path);
    w.header({"episode", "steps", "updates", "mean_reward", "epsilon", "mean_loss"});
    for (const auto& r : rows)
        w.row({std::to_string(r.episode), std::to_string(r.steps), std::to_string(r.updates), csv::fmt(r.mean_reward),
               csv::fmt(r.epsilon), csv::fmt(r.mean_loss)});
}

} // namespace ranopt::rlapps
