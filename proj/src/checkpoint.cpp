#include "uwct/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uwct {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'U', 'W', 'C', 'T', 'C', 'K', 'P', 'T'};
constexpr uint64_t kSentinel = 0x31544b43'54435755ull;

struct Writer {
  std::ostream& out;

  void bytes(const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(uint32_t v) { bytes(&v, sizeof(v)); }
  void u64(uint64_t v) { bytes(&v, sizeof(v)); }
  void f64(double v) { bytes(&v, sizeof(v)); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32_block(std::span<const float> values) {
    u64(values.size());
    bytes(values.data(), values.size() * sizeof(float));
  }
  void shape(const Shape& s) {
    u32(static_cast<uint32_t>(s.size()));
    for (int64_t d : s) u64(static_cast<uint64_t>(d));
  }
};

struct Reader {
  std::istream& in;

  void bytes(void* data, size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated checkpoint file");
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, sizeof(v));
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, sizeof(v));
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof(v));
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    if (n > (1u << 20)) throw std::runtime_error("checkpoint string block too large");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<float> f32_block() {
    const uint64_t n = u64();
    if (n > (1ull << 31)) throw std::runtime_error("checkpoint float block too large");
    std::vector<float> values(n);
    bytes(values.data(), n * sizeof(float));
    return values;
  }
  Shape shape() {
    const uint32_t rank = u32();
    if (rank > 8) throw std::runtime_error("checkpoint tensor rank too large");
    Shape s(rank);
    for (uint32_t i = 0; i < rank; ++i) s[i] = static_cast<int64_t>(u64());
    return s;
  }
};

void write_net_params(Writer& w, std::span<const Param<float>> params) {
  w.u32(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.shape(p.tensor.shape());
    w.f32_block(p.tensor.values());
  }
}

void read_net_params(Reader& r, std::span<const Param<float>> params, const char* tag) {
  const uint32_t count = r.u32();
  if (count != params.size()) {
    throw std::runtime_error(std::string("checkpoint/arch mismatch: ") + tag +
                             " expects " + std::to_string(params.size()) +
                             " parameters, file has " + std::to_string(count));
  }
  for (const auto& p : params) {
    const std::string name = r.str();
    const Shape shape = r.shape();
    std::vector<float> values = r.f32_block();
    if (name != p.name || shape != p.tensor.shape() ||
        static_cast<int64_t>(values.size()) != p.tensor.numel()) {
      throw std::runtime_error(std::string("checkpoint/arch mismatch: ") + tag +
                               " parameter '" + name + "' " + shape_str(shape) +
                               " does not match expected '" + p.name + "' " +
                               shape_str(p.tensor.shape()));
    }
    Tensor<float> tensor = p.tensor;
    std::copy(values.begin(), values.end(), tensor.mutable_values().begin());
  }
}

void write_optimizer(Writer& w, const AdamOptimizer<float>& opt) {
  w.u64(opt.step_count());
  w.f64(opt.config().learning_rate);
  w.f64(opt.config().beta1);
  w.f64(opt.config().beta2);
  w.f64(opt.config().epsilon);
  w.u32(static_cast<uint32_t>(opt.size()));
  for (size_t i = 0; i < opt.size(); ++i) {
    w.f32_block(opt.first_moment(i));
    w.f32_block(opt.second_moment(i));
  }
}

void read_optimizer(Reader& r, AdamOptimizer<float>& opt, const char* tag) {
  const uint64_t step_count = r.u64();
  r.f64();  // optimizer hyperparameters travel in the config snapshot
  r.f64();
  r.f64();
  r.f64();
  const uint32_t count = r.u32();
  if (count != opt.size()) {
    throw std::runtime_error(std::string("checkpoint/arch mismatch: optimizer ") + tag +
                             " parameter count " + std::to_string(count) +
                             " does not match " + std::to_string(opt.size()));
  }
  std::vector<std::vector<float>> m, v;
  for (uint32_t i = 0; i < count; ++i) {
    m.push_back(r.f32_block());
    v.push_back(r.f32_block());
  }
  opt.restore(step_count, std::move(m), std::move(v));
}

void write_replay(Writer& w, const ReplayBuffer<float>& buffer) {
  w.u32(static_cast<uint32_t>(buffer.capacity()));
  std::ostringstream rng_state;
  buffer.rng().save(rng_state);
  w.str(rng_state.str());
  w.u32(static_cast<uint32_t>(buffer.pool().size()));
  for (const auto& image : buffer.pool()) {
    w.shape(image.shape());
    w.f32_block(image.values());
  }
}

void read_replay(Reader& r, ReplayBuffer<float>& buffer) {
  const uint32_t capacity = r.u32();
  if (static_cast<int64_t>(capacity) != buffer.capacity()) {
    throw std::runtime_error("checkpoint replay capacity " + std::to_string(capacity) +
                             " does not match configured " +
                             std::to_string(buffer.capacity()));
  }
  std::istringstream rng_state(r.str());
  Rng rng;
  rng.load(rng_state);
  const uint32_t pool_size = r.u32();
  std::vector<Tensor<float>> pool;
  for (uint32_t i = 0; i < pool_size; ++i) {
    const Shape shape = r.shape();
    std::vector<float> values = r.f32_block();
    pool.push_back(Tensor<float>::from_vector(shape, std::move(values), false));
  }
  buffer.restore(std::move(pool), rng);
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    Writer w{out};
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kCheckpointVersion);
    w.str(state.config.arch_preset);
    w.str(serialize_config(state.config));
    w.u64(state.seed);
    w.u64(state.step);
    write_net_params(w, state.gen_fwd.params());
    write_net_params(w, state.gen_bwd.params());
    write_net_params(w, state.disc_x.params());
    write_net_params(w, state.disc_y.params());
    write_optimizer(w, state.opt_gen_fwd);
    write_optimizer(w, state.opt_gen_bwd);
    write_optimizer(w, state.opt_disc_x);
    write_optimizer(w, state.opt_disc_y);
    write_replay(w, state.replay_x);
    write_replay(w, state.replay_y);
    std::ostringstream rng_state;
    state.trainer_rng.save(rng_state);
    w.str(rng_state.str());
    w.u64(kSentinel);
    if (!out) throw std::runtime_error("short write for checkpoint " + path.string());
  }
  fs::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader r{in};

  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint format version " + std::to_string(version) +
                             " is not supported (this build reads version " +
                             std::to_string(kCheckpointVersion) + ")");
  }
  const std::string preset = r.str();
  const std::string config_text = r.str();
  TrainConfig config = parse_config(config_text);
  if (config.arch_preset != preset) {
    throw std::runtime_error("checkpoint header preset '" + preset +
                             "' does not match config snapshot '" + config.arch_preset +
                             "'");
  }
  const uint64_t seed = r.u64();
  const uint64_t step = r.u64();

  TrainState state = TrainState::create(config, seed);
  state.step = step;
  read_net_params(r, state.gen_fwd.params(), "gen_fwd");
  read_net_params(r, state.gen_bwd.params(), "gen_bwd");
  read_net_params(r, state.disc_x.params(), "disc_x");
  read_net_params(r, state.disc_y.params(), "disc_y");
  read_optimizer(r, state.opt_gen_fwd, "gen_fwd");
  read_optimizer(r, state.opt_gen_bwd, "gen_bwd");
  read_optimizer(r, state.opt_disc_x, "disc_x");
  read_optimizer(r, state.opt_disc_y, "disc_y");
  read_replay(r, state.replay_x);
  read_replay(r, state.replay_y);
  std::istringstream rng_state(r.str());
  state.trainer_rng.load(rng_state);
  if (r.u64() != kSentinel) {
    throw std::runtime_error("corrupt checkpoint (bad trailer): " + path.string());
  }
  return state;
}

}  // namespace uwct
