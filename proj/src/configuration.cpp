#include "perco/configuration.hpp"

#include "perco/rng.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace perco {

Configuration::Configuration(std::shared_ptr<const LatticeGraph> graph, double p,
                             std::uint64_t seed, std::uint64_t replicate)
    : graph_(std::move(graph)), p_(p), seed_(seed), replicate_(replicate) {
  if (!graph_) throw std::invalid_argument("configuration needs a lattice");
  states_.assign(graph_->variable_count(), 0);
}

void Configuration::fill(bool open) { std::fill(states_.begin(), states_.end(), open ? 1 : 0); }

std::size_t Configuration::open_count() const {
  return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), 1));
}

UniformField::UniformField(std::shared_ptr<const LatticeGraph> graph, std::uint64_t seed,
                           std::uint64_t replicate)
    : graph_(std::move(graph)), seed_(seed), replicate_(replicate) {
  const std::size_t n = graph_->variable_count();
  values_.resize(n);
  for (std::size_t b = 0; 2 * b < n; ++b) {
    const auto u = uniform_pair(seed, replicate, b);
    values_[2 * b] = u[0];
    if (2 * b + 1 < n) values_[2 * b + 1] = u[1];
  }
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("probability p=" + std::to_string(p) + " outside [0, 1]");
}

void sample_into(Configuration& out, double p, std::uint64_t seed, std::uint64_t replicate) {
  check_probability(p);
  const std::size_t n = out.size();
  for (std::size_t b = 0; 2 * b < n; ++b) {
    const auto u = uniform_pair(seed, replicate, b);
    out.set(2 * b, u[0] < p);
    if (2 * b + 1 < n) out.set(2 * b + 1, u[1] < p);
  }
  out.set_provenance(p, seed, replicate);
}

Configuration sample(std::shared_ptr<const LatticeGraph> graph, double p, std::uint64_t seed,
                     std::uint64_t replicate) {
  Configuration c(std::move(graph));
  sample_into(c, p, seed, replicate);
  return c;
}

Configuration threshold(const UniformField& field, double p) {
  check_probability(p);
  Configuration c(field.graph_ptr(), p, field.seed(), field.replicate());
  for (std::size_t k = 0; k < field.size(); ++k) c.set(k, field[k] < p);
  return c;
}

Configuration translate(const Configuration& c, int di, int dj) {
  const LatticeGraph& g = c.graph();
  Configuration out(c.graph_ptr(), c.p(), c.seed(), c.replicate());
  if (g.mesh().mode() == Mode::Site) {
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      const Site s = g.site(static_cast<int>(v));
      if (auto u = g.find_vertex(s.i - di, s.j - dj)) out.set(v, c.open(*u));
    }
  } else {
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const auto ends = g.edge_sites(static_cast<int>(e));
      auto src = g.edge_between({ends[0].i - di, ends[0].j - dj}, {ends[1].i - di, ends[1].j - dj});
      if (src) out.set(e, c.open(*src));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t default_enumeration_cap() {
  if (const char* env = std::getenv("PERCO_ENUM_CAP")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v <= 40) return v;
  }
  return 24;
}

Enumeration::Enumeration(std::shared_ptr<const LatticeGraph> graph,
                         std::vector<int> free_variables, std::size_t cap)
    : graph_(std::move(graph)), free_(std::move(free_variables)) {
  std::sort(free_.begin(), free_.end());
  free_.erase(std::unique(free_.begin(), free_.end()), free_.end());
  if (free_.size() > cap)
    throw std::invalid_argument("enumeration over n=" + std::to_string(free_.size()) +
                                " free variables exceeds the cap of " + std::to_string(cap));
  for (int k : free_)
    if (k < 0 || static_cast<std::size_t>(k) >= graph_->variable_count())
      throw std::invalid_argument("free variable " + std::to_string(k) + " outside the window");
}

void Enumeration::for_each(const std::function<void(const Configuration&, int)>& fn) const {
  Configuration c(graph_);
  const std::uint64_t total = count();
  int open = 0;
  fn(c, 0);
  // Gray code order: one variable flips per step.
  for (std::uint64_t m = 1; m < total; ++m) {
    const int bit = __builtin_ctzll(m);
    const int k = free_[static_cast<std::size_t>(bit)];
    const bool now = !c.open(static_cast<std::size_t>(k));
    c.set(static_cast<std::size_t>(k), now);
    open += now ? 1 : -1;
    fn(c, open);
  }
}

std::vector<ExactRational> Enumeration::weights(const ExactRational& p) const {
  const std::size_t n = free_.size();
  std::vector<ExactRational> w(n + 1);
  const ExactRational q = 1 - p;
  for (std::size_t k = 0; k <= n; ++k) {
    ExactRational v = 1;
    for (std::size_t a = 0; a < k; ++a) v *= p;
    for (std::size_t a = k; a < n; ++a) v *= q;
    w[k] = v;
  }
  return w;
}

ExactRational weighted_sum(const std::vector<std::uint64_t>& counts, const ExactRational& p) {
  if (counts.empty()) return 0;
  const std::size_t n = counts.size() - 1;
  const ExactRational q = 1 - p;
  ExactRational total = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (counts[k] == 0) continue;
    ExactRational v = counts[k];
    for (std::size_t a = 0; a < k; ++a) v *= p;
    for (std::size_t a = k; a < n; ++a) v *= q;
    total += v;
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', 'F'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    std::memcpy(&bits, &v, sizeof v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t k = 0; k < sizeof(T); ++k) buf[k] = static_cast<unsigned char>(bits >> (8 * k));
  os.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <typename T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof buf))
    throw std::runtime_error("configuration dump truncated");
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
  if constexpr (std::is_same_v<T, double>) {
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_dump(std::ostream& os, const Configuration& c) {
  const LatticeGraph& g = c.graph();
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kDumpVersion);
  put<std::uint8_t>(os, g.mesh().mode() == Mode::Site ? 0 : 1);
  put<std::uint8_t>(os, g.mesh().variant() == Variant::Square ? 0 : 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.mesh().l()));
  const Window& w = g.window();
  for (int v : {w.i_min, w.i_max, w.j_min, w.j_max}) put<std::int32_t>(os, v);
  put<std::uint64_t>(os, c.seed());
  put<std::uint64_t>(os, c.replicate());
  put<double>(os, c.p());
  put<std::uint64_t>(os, c.size());
  std::vector<char> bytes((c.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < c.size(); ++k)
    if (c.open(k)) bytes[k / 8] = static_cast<char>(bytes[k / 8] | (1 << (k % 8)));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Configuration read_dump(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a configuration dump");
  if (get<std::uint32_t>(is) != kDumpVersion)
    throw std::runtime_error("unsupported configuration dump version");
  const Mode mode = get<std::uint8_t>(is) == 0 ? Mode::Site : Mode::Bond;
  const Variant variant = get<std::uint8_t>(is) == 0 ? Variant::Square : Variant::Triangular;
  const int l = static_cast<int>(get<std::uint32_t>(is));
  Window w;
  w.i_min = get<std::int32_t>(is);
  w.i_max = get<std::int32_t>(is);
  w.j_min = get<std::int32_t>(is);
  w.j_max = get<std::int32_t>(is);
  const auto seed = get<std::uint64_t>(is);
  const auto replicate = get<std::uint64_t>(is);
  const double p = get<double>(is);
  const auto count = get<std::uint64_t>(is);
  auto graph = std::make_shared<const LatticeGraph>(MeshSpec(l, mode, variant), w);
  Configuration c(graph, p, seed, replicate);
  if (count != c.size()) throw std::runtime_error("configuration dump size mismatch");
  std::vector<char> bytes((count + 7) / 8);
  if (!is.read(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw std::runtime_error("configuration dump truncated");
  for (std::size_t k = 0; k < count; ++k) c.set(k, (bytes[k / 8] >> (k % 8)) & 1);
  return c;
}

}  // namespace perco
