#include "vortexswim/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vortexswim/io.hpp"

namespace vortexswim::dqn {

namespace {

constexpr std::string_view kCheckpointMagic = "VSWQ1";

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct Cache {
  // [layer][t]
  std::vector<std::vector<MatrixXd>> z, f, i, o, g, c, tc, h;
  MatrixXd q;
};

// xs[t]: input x batch, oldest step first.
Cache forward(const Network& net, const std::vector<MatrixXd>& xs) {
  const auto& sh = net.shape();
  const int H = sh.hidden;
  const Eigen::Index B = xs.front().cols();
  Cache k;
  for (auto* v : {&k.z, &k.f, &k.i, &k.o, &k.g, &k.c, &k.tc, &k.h}) v->assign(sh.layers, {});
  for (int l = 0; l < sh.layers; ++l) {
    const auto W = net.view(net.weight(l));
    const auto b = net.view(net.bias(l)).col(0);
    const int in = net.layer_input(l);
    MatrixXd h = MatrixXd::Zero(H, B), c = MatrixXd::Zero(H, B);
    for (int t = 0; t < sh.steps; ++t) {
      MatrixXd z(H + in, B);
      z.topRows(H) = h;
      z.bottomRows(in) = l == 0 ? xs[t] : k.h[l - 1][t];
      MatrixXd a = W * z;
      a.colwise() += b;
      MatrixXd f = sigmoid(a.topRows(H));
      MatrixXd i = sigmoid(a.middleRows(H, H));
      MatrixXd o = sigmoid(a.middleRows(2 * H, H));
      MatrixXd g = a.bottomRows(H).array().tanh().matrix();
      c = (f.array() * c.array() + i.array() * g.array()).matrix();
      MatrixXd tc = c.array().tanh().matrix();
      h = (o.array() * tc.array()).matrix();
      k.z[l].push_back(std::move(z));
      k.f[l].push_back(std::move(f));
      k.i[l].push_back(std::move(i));
      k.o[l].push_back(std::move(o));
      k.g[l].push_back(std::move(g));
      k.c[l].push_back(c);
      k.tc[l].push_back(std::move(tc));
      k.h[l].push_back(h);
    }
  }
  k.q = net.view(net.head_weight()) * k.h.back().back();
  k.q.colwise() += net.view(net.head_bias()).col(0);
  return k;
}

std::vector<MatrixXd> batch_inputs(const NetShape& sh, std::span<const env::StateWindow* const> states) {
  const Eigen::Index B = Eigen::Index(states.size());
  std::vector<MatrixXd> xs(sh.steps, MatrixXd(sh.input, B));
  for (Eigen::Index j = 0; j < B; ++j) {
    const MatrixXd seq = sequence_input(*states[j]);
    for (int t = 0; t < sh.steps; ++t) xs[t].col(j) = seq.col(t);
  }
  return xs;
}

void check_input(const NetShape& sh) {
  if (sh.input != env::kObsDim + 1 || sh.steps != env::kHistory)
    throw std::invalid_argument("network input does not match the state window");
}

}  // namespace

Network::Network(const NetShape& shape) : shape_(shape) {
  if (shape.hidden < 1 || shape.layers < 1 || shape.actions < 2 || shape.input < 1 || shape.steps < 1)
    throw std::invalid_argument("bad network shape");
  std::size_t off = 0;
  auto add = [&](int r, int c) {
    blocks_.push_back({off, r, c});
    off += std::size_t(r) * c;
  };
  for (int l = 0; l < shape.layers; ++l) {
    add(4 * shape.hidden, shape.hidden + layer_input(l));
    add(4 * shape.hidden, 1);
  }
  add(shape.actions, shape.hidden);
  add(shape.actions, 1);
  params_ = VectorXd::Zero(Eigen::Index(off));
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int H = shape_.hidden;
  for (int l = 0; l < shape_.layers; ++l) {
    const double s = 1.0 / std::sqrt(double(H + layer_input(l)));
    auto W = view(weight(l));
    for (Eigen::Index k = 0; k < W.size(); ++k) W.data()[k] = s * u(rng);
    auto b = view(bias(l));
    for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = s * u(rng);
    b.topRows(H).setOnes();
  }
  const double s = 1.0 / std::sqrt(double(H));
  for (const Block* bl : {&head_weight(), &head_bias()}) {
    auto m = view(*bl);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = s * u(rng);
  }
}

CellOutput lstm_cell(const MatrixXd& x, const MatrixXd& h, const MatrixXd& c,
                     const Eigen::Ref<const MatrixXd>& w, const Eigen::Ref<const VectorXd>& b) {
  const Eigen::Index H = h.rows();
  if (c.rows() != H || w.rows() != 4 * H || w.cols() != H + x.rows() || b.size() != 4 * H ||
      x.cols() != h.cols() || c.cols() != h.cols())
    throw std::invalid_argument("lstm_cell: inconsistent shapes");
  MatrixXd z(H + x.rows(), x.cols());
  z.topRows(H) = h;
  z.bottomRows(x.rows()) = x;
  MatrixXd a = w * z;
  a.colwise() += b;
  const MatrixXd f = sigmoid(a.topRows(H));
  const MatrixXd i = sigmoid(a.middleRows(H, H));
  const MatrixXd o = sigmoid(a.middleRows(2 * H, H));
  const MatrixXd g = a.bottomRows(H).array().tanh().matrix();
  CellOutput out;
  out.c = (f.array() * c.array() + i.array() * g.array()).matrix();
  out.h = (o.array() * out.c.array().tanh()).matrix();
  return out;
}

MatrixXd sequence_input(const env::StateWindow& s) {
  MatrixXd x(env::kObsDim + 1, env::kHistory);
  for (int t = 0; t < env::kHistory; ++t) {
    const int slot = env::kHistory - 1 - t;
    for (int d = 0; d < env::kObsDim; ++d) x(d, t) = s[slot * env::kObsDim + d];
    x(env::kObsDim, t) = s[env::kStateDim - 1];
  }
  return x;
}

VectorXd q_forward(const Network& net, const env::StateWindow& s) {
  const env::StateWindow* p = &s;
  return q_forward_batch(net, {&p, 1}).col(0);
}

MatrixXd q_forward_batch(const Network& net, std::span<const env::StateWindow* const> states) {
  check_input(net.shape());
  return forward(net, batch_inputs(net.shape(), states)).q;
}

double td_target(double r, bool done, const VectorXd& q_next, double gamma) {
  return done ? r : r + gamma * q_next.maxCoeff();
}

std::vector<double> td_targets(const Network& target, std::span<const Transition* const> batch,
                               double gamma) {
  std::vector<const env::StateWindow*> next;
  next.reserve(batch.size());
  for (const auto* t : batch) next.push_back(&t->s_next);
  const MatrixXd q = q_forward_batch(target, next);
  std::vector<double> y(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j)
    y[j] = td_target(batch[j]->r, batch[j]->done, q.col(Eigen::Index(j)), gamma);
  return y;
}

LossGrad loss_and_gradient(const Network& net, std::span<const Transition* const> batch,
                           std::span<const double> y) {
  const auto& sh = net.shape();
  check_input(sh);
  if (batch.empty() || y.size() != batch.size())
    throw std::invalid_argument("loss_and_gradient: batch and targets differ in size");
  std::vector<const env::StateWindow*> states;
  for (const auto* t : batch) states.push_back(&t->s);
  const Cache k = forward(net, batch_inputs(sh, states));
  const Eigen::Index B = Eigen::Index(batch.size());
  const int H = sh.hidden;

  LossGrad out;
  out.grad = VectorXd::Zero(Eigen::Index(net.size()));
  MatrixXd dq = MatrixXd::Zero(sh.actions, B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const int a = batch[j]->a;
    if (a < 0 || a >= sh.actions) throw std::out_of_range("transition action out of range");
    const double e = k.q(a, j) - y[j];
    out.loss += e * e;
    dq(a, j) = 2.0 * e / double(B);
  }
  out.loss /= double(B);
  if (!std::isfinite(out.loss)) throw TrainingDivergedError("non-finite loss");

  auto grad_view = [&](const Block& b) {
    return Eigen::Map<MatrixXd>(out.grad.data() + b.offset, b.rows, b.cols);
  };
  grad_view(net.head_weight()) = dq * k.h.back().back().transpose();
  grad_view(net.head_bias()) = dq.rowwise().sum();

  // dh[t] flowing into layer l from above (or the head).
  std::vector<MatrixXd> dh_above(sh.steps, MatrixXd::Zero(H, B));
  dh_above.back() = net.view(net.head_weight()).transpose() * dq;
  for (int l = sh.layers - 1; l >= 0; --l) {
    const auto W = net.view(net.weight(l));
    auto dW = grad_view(net.weight(l));
    auto db = grad_view(net.bias(l));
    const int in = net.layer_input(l);
    std::vector<MatrixXd> dx(sh.steps);
    MatrixXd dh_next = MatrixXd::Zero(H, B), dc_next = MatrixXd::Zero(H, B);
    MatrixXd da(4 * H, B);
    for (int t = sh.steps - 1; t >= 0; --t) {
      const auto& f = k.f[l][t].array();
      const auto& i = k.i[l][t].array();
      const auto& o = k.o[l][t].array();
      const auto& g = k.g[l][t].array();
      const auto& tc = k.tc[l][t].array();
      const MatrixXd dh = dh_above[t] + dh_next;
      const Eigen::ArrayXXd dc = dh.array() * o * (1.0 - tc * tc) + dc_next.array();
      const Eigen::ArrayXXd c_prev =
          t > 0 ? Eigen::ArrayXXd(k.c[l][t - 1].array()) : Eigen::ArrayXXd::Zero(H, B);
      da.topRows(H) = (dc * c_prev * f * (1.0 - f)).matrix();
      da.middleRows(H, H) = (dc * g * i * (1.0 - i)).matrix();
      da.middleRows(2 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
      da.bottomRows(H) = (dc * i * (1.0 - g * g)).matrix();
      dW.noalias() += da * k.z[l][t].transpose();
      db.noalias() += da.rowwise().sum();
      const MatrixXd dz = W.transpose() * da;
      dh_next = dz.topRows(H);
      dx[t] = dz.bottomRows(in);
      dc_next = (dc * f).matrix();
    }
    if (l > 0) dh_above = std::move(dx);
  }
  if (!out.grad.allFinite()) throw TrainingDivergedError("non-finite gradient");
  return out;
}

void Adam::reset(std::size_t n) {
  m = VectorXd::Zero(Eigen::Index(n));
  v = VectorXd::Zero(Eigen::Index(n));
  t = 0;
}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  if (m.size() != params.size()) reset(std::size_t(params.size()));
  if (grad.size() != params.size()) throw std::invalid_argument("Adam: gradient size mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, double(t));
  const double c2 = 1.0 - std::pow(beta2, double(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void sync_target(const Network& value, Network& target) { target = value; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_)
    data_.push_back(t);
  else
    data_[cursor_] = t;
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  if (n > data_.size()) throw std::invalid_argument("replay holds fewer transitions than the batch");
  std::vector<std::size_t> out;
  out.reserve(n);
  std::vector<std::size_t> all(data_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), std::back_inserter(out), std::ptrdiff_t(n), rng);
  return out;
}

void ReplayBuffer::restore(std::vector<Transition> data, std::size_t cursor) {
  if (data.size() > capacity_ || cursor >= capacity_ ||
      (data.size() < capacity_ && cursor != data.size() % capacity_))
    throw IoError("inconsistent replay buffer state");
  data_ = std::move(data);
  data_.reserve(capacity_);
  cursor_ = cursor;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) g[t] = acc = rewards[t] + gamma * acc;
  return g;
}

double epsilon_at(std::uint64_t step, const Schedule& s) {
  return std::max(s.eps_min, s.eps_max - s.eps_decay * double(step));
}

int argmax(const VectorXd& q) {
  int best = 0;
  for (int k = 1; k < int(q.size()); ++k)
    if (q[k] > q[best]) best = k;
  return best;
}

int select_action(const VectorXd& q, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) return std::uniform_int_distribution<int>(0, int(q.size()) - 1)(rng);
  return argmax(q);
}

std::string reward_log_header() { return "episode,steps,cumulative_reward,outcome\n"; }

std::string reward_log_row(const EpisodeLog& e) {
  std::ostringstream os;
  os << std::setprecision(17) << e.episode << ',' << e.steps << ',' << e.cumulative_reward << ','
     << env::to_string(e.outcome) << '\n';
  return os.str();
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
  // splitmix64 of the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + episode + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Agent::Agent(const AgentConfig& cfg)
    : cfg_(cfg), value_(cfg.net), target_(cfg.net), replay_(std::size_t(cfg.replay)), rng_(cfg.seed) {
  if (cfg.batch < 1 || cfg.batch > cfg.replay) throw ConfigError("agent.batch must be in [1, agent.replay]");
  if (cfg.schedule.target_sync < 1) throw ConfigError("agent.target_sync must be >= 1");
  if (!(cfg.schedule.gamma >= 0.0 && cfg.schedule.gamma <= 1.0)) throw ConfigError("agent.gamma must be in [0, 1]");
  if (!(cfg.schedule.eps_min >= 0.0 && cfg.schedule.eps_min <= cfg.schedule.eps_max && cfg.schedule.eps_max <= 1.0))
    throw ConfigError("agent epsilon bounds must satisfy 0 <= eps_min <= eps_max <= 1");
  value_.initialize(cfg.seed);
  sync_target(value_, target_);
  adam_.lr = cfg.schedule.lr;
  adam_.reset(value_.size());
}

int Agent::act(const env::StateWindow& s) { return select_action(q_forward(value_, s), epsilon(), rng_); }

double Agent::observe(const Transition& t) {
  replay_.push(t);
  ++env_steps_;
  if (replay_.size() < std::size_t(cfg_.batch)) return std::numeric_limits<double>::quiet_NaN();
  const auto idx = replay_.sample_indices(std::size_t(cfg_.batch), rng_);
  std::vector<const Transition*> batch;
  batch.reserve(idx.size());
  for (auto i : idx) batch.push_back(&replay_.at(i));
  const auto y = td_targets(target_, batch, cfg_.schedule.gamma);
  const auto lg = loss_and_gradient(value_, batch, y);
  adam_.step(value_.params(), lg.grad);
  ++grad_steps_;
  if (grad_steps_ % std::uint64_t(cfg_.schedule.target_sync) == 0) {
    sync_target(value_, target_);
    ++syncs_;
  }
  return lg.loss;
}

EpisodeLog Agent::run_episode(env::Environment& e,
                              const std::function<void(const env::StepResult&)>& on_step) {
  EpisodeLog log;
  log.episode = episodes_;
  env::StateWindow s = e.reset(episode_seed(cfg_.seed, std::uint64_t(episodes_)));
  for (;;) {
    const int a = act(s);
    const auto r = e.step(a);
    // Hitting the step cap is not a true terminal: keep bootstrapping.
    observe({s, a, r.reward, r.state, r.done && r.outcome != env::Outcome::Timeout});
    log.cumulative_reward += r.reward;
    ++log.steps;
    if (on_step) on_step(r);
    s = r.state;
    if (r.done) {
      log.outcome = r.outcome;
      break;
    }
  }
  ++episodes_;
  return log;
}

namespace {

void write_manifest(io::BinaryWriter& w, const Network& n) {
  w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.put(std::uint32_t(n.blocks().size()));
  for (const auto& b : n.blocks()) {
    w.put(std::uint32_t(b.rows));
    w.put(std::uint32_t(b.cols));
  }
}

void put_vector(io::BinaryWriter& w, const VectorXd& v) {
  w.bytes(v.data(), std::size_t(v.size()) * sizeof(double));
}

VectorXd get_vector(io::BinaryReader& r, std::size_t n) {
  VectorXd v(Eigen::Index(n), 1);
  r.bytes(v.data(), n * sizeof(double));
  return v;
}

NetShape read_manifest(io::BinaryReader& r) {
  r.magic(kCheckpointMagic);
  const auto count = r.get<std::uint32_t>();
  if (count < 4 || count % 2 != 0 || count > 1000)
    throw IoError(r.path().string() + ": bad checkpoint manifest");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dims(count);
  for (auto& d : dims) {
    d.first = r.get<std::uint32_t>();
    d.second = r.get<std::uint32_t>();
  }
  NetShape s;
  s.layers = int(count / 2 - 1);
  s.hidden = int(dims[0].first / 4);
  s.input = int(dims[0].second) - s.hidden;
  s.actions = int(dims[count - 1].first);
  if (s.hidden < 1 || s.input < 1 || s.actions < 2)
    throw IoError(r.path().string() + ": bad checkpoint manifest");
  const Network probe(s);
  for (std::size_t k = 0; k < count; ++k)
    if (int(dims[k].first) != probe.blocks()[k].rows || int(dims[k].second) != probe.blocks()[k].cols)
      throw IoError(r.path().string() + ": inconsistent checkpoint manifest");
  return s;
}

void require_shape(const NetShape& got, const NetShape& want, const std::filesystem::path& p) {
  if (got.hidden != want.hidden || got.layers != want.layers || got.input != want.input ||
      got.actions != want.actions) {
    std::ostringstream os;
    os << p.string() << ": checkpoint network is " << got.layers << "x" << got.hidden << " with "
       << got.actions << " actions, config expects " << want.layers << "x" << want.hidden
       << " with " << want.actions << " actions";
    throw IoError(os.str());
  }
}

void put_window(io::BinaryWriter& w, const env::StateWindow& s) { w.bytes(s.data(), sizeof(s)); }
void get_window(io::BinaryReader& r, env::StateWindow& s) { r.bytes(s.data(), sizeof(s)); }

}  // namespace

void Agent::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path);
  write_manifest(w, value_);
  put_vector(w, value_.params());
  put_vector(w, target_.params());
  w.put(std::uint64_t(adam_.t));
  put_vector(w, adam_.m);
  put_vector(w, adam_.v);
  w.put(std::uint64_t(env_steps_));
  w.put(std::uint64_t(grad_steps_));
  w.put(std::uint64_t(syncs_));
  w.put(std::uint64_t(episodes_));
  std::ostringstream rs;
  rs << rng_;
  const std::string rng = rs.str();
  w.put(std::uint64_t(rng.size()));
  w.bytes(rng.data(), rng.size());
  w.put(std::uint64_t(replay_.capacity()));
  w.put(std::uint64_t(replay_.cursor()));
  w.put(std::uint64_t(replay_.size()));
  for (std::size_t i = 0; i < replay_.size(); ++i) {
    const auto& t = replay_.at(i);
    put_window(w, t.s);
    w.put(std::int32_t(t.a));
    w.put(t.r);
    put_window(w, t.s_next);
    w.put(std::uint8_t(t.done ? 1 : 0));
  }
  w.commit();
}

void Agent::load(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  require_shape(read_manifest(r), cfg_.net, path);
  const std::size_t n = value_.size();
  value_.params() = get_vector(r, n);
  target_.params() = get_vector(r, n);
  adam_.t = r.get<std::uint64_t>();
  adam_.m = get_vector(r, n);
  adam_.v = get_vector(r, n);
  env_steps_ = r.get<std::uint64_t>();
  grad_steps_ = r.get<std::uint64_t>();
  syncs_ = r.get<std::uint64_t>();
  episodes_ = int(r.get<std::uint64_t>());
  std::string rng(r.get<std::uint64_t>(), '\0');
  r.bytes(rng.data(), rng.size());
  std::istringstream rs(rng);
  rs >> rng_;
  if (!rs) throw IoError(path.string() + ": bad RNG state");
  const auto cap = r.get<std::uint64_t>();
  const auto cursor = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (cap != replay_.capacity()) throw IoError(path.string() + ": replay capacity differs from the config");
  if (count > cap) throw IoError(path.string() + ": bad replay count");
  std::vector<Transition> data(count);
  for (auto& t : data) {
    get_window(r, t.s);
    t.a = r.get<std::int32_t>();
    t.r = r.get<double>();
    get_window(r, t.s_next);
    t.done = r.get<std::uint8_t>() != 0;
  }
  replay_.restore(std::move(data), std::size_t(cursor));
}

NetShape checkpoint_shape(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  return read_manifest(r);
}

Network load_network(const std::filesystem::path& path, const NetShape& shape) {
  io::BinaryReader r(path);
  require_shape(read_manifest(r), shape, path);
  Network net(shape);
  net.params() = get_vector(r, net.size());
  return net;
}

std::vector<double> sweep_points(double a, double b, int n) {
  if (n < 1) throw std::invalid_argument("sweep needs at least one point");
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) x[std::size_t(k)] = n == 1 ? a : a + (b - a) * k / double(n - 1);
  return x;
}

std::vector<Rollout> evaluate(env::FishEnv& e, const Network& net, std::span<const Vec2> starts) {
  std::vector<Rollout> out;
  for (const Vec2 p : starts) {
    Rollout ro;
    ro.start_x = p.x;
    env::StateWindow s = e.reset_at(p);
    for (;;) {
      const auto r = e.step(argmax(q_forward(net, s)));
      ro.cumulative_reward += r.reward;
      s = r.state;
      if (r.done) {
        ro.outcome = r.outcome;
        break;
      }
    }
    ro.steps = e.steps();
    ro.final_distance = env::distance_to_target(e.tip(), e.config());
    ro.trajectory = e.trajectory();
    out.push_back(std::move(ro));
  }
  return out;
}

}  // namespace vortexswim::dqn
