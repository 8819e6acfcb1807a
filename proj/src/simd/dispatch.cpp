#include <atomic>
#include <cstdlib>
#include <string>

#include "ftfer/error.hpp"
#include "tables.hpp"

namespace ftfer::simd {

namespace {

bool cpu_has_avx2() {
#if defined(FTFER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* chosen = table_for(best_available_level());
  if (const char* env = std::getenv("FTFER_SIMD")) {
    if (auto level = parse_level(env)) {
      if (const KernelTable* forced = table_for(*level)) chosen = forced;
    }
  }
  return chosen;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* table_for(Level level) {
  switch (level) {
    case Level::scalar:
      return &detail::scalar_table();
    case Level::avx2:
#if defined(FTFER_HAVE_AVX2)
      if (cpu_has_avx2()) return &detail::avx2_table();
#endif
      return nullptr;
  }
  return nullptr;
}

Level best_available_level() {
  return cpu_has_avx2() ? Level::avx2 : Level::scalar;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

Level active_level() { return kernels().level; }

void set_level(Level level) {
  const KernelTable* table = table_for(level);
  if (table == nullptr) {
    throw InvalidArgument("SIMD level '" + std::string(to_string(level)) +
                          "' is not available on this machine");
  }
  active().store(table, std::memory_order_release);
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<Level> parse_level(std::string_view name) {
  if (name == "scalar") return Level::scalar;
  if (name == "avx2") return Level::avx2;
  return std::nullopt;
}

}  // namespace ftfer::simd
