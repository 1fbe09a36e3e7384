#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace arturo::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  return std::nullopt;
}

const KernelTable* avx2_table() {
#if defined(ARTURO_HAVE_AVX2)
  static const bool cpu_ok = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return cpu_ok ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

bool isa_available(Isa isa) {
  return isa == Isa::scalar || avx2_table() != nullptr;
}

const KernelTable& table_for(Isa isa) {
  if (isa == Isa::avx2) {
    if (const KernelTable* t = avx2_table()) return *t;
    throw std::invalid_argument("AVX2 kernels are not available on this CPU");
  }
  return scalar_table();
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("ARTURO_ISA")) {
    const auto isa = parse_isa(env);
    if (!isa) {
      throw std::invalid_argument(std::string("ARTURO_ISA: unknown ISA '") +
                                  env + "'");
    }
    return &table_for(*isa);
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() {
  return *active_slot().load(std::memory_order_acquire);
}

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) {
  active_slot().store(&table_for(isa), std::memory_order_release);
}

}  // namespace arturo::kernels
