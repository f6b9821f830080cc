#include <cstdlib>
#include <iostream>

#include "lupi/core.hpp"
#include "lupi/kern/kernels.hpp"

namespace lupi::kern {
namespace {

struct State {
    Backend backend;
    Kernels<float> f32{};
    Kernels<double> f64{};
};

void fill(State& s, Backend b) {
    scalar::fill_table(s.f32);
    scalar::fill_table(s.f64);
    if (b == Backend::avx2) {
        avx2::fill_table(s.f32);
        avx2::fill_table(s.f64);
    }
    s.backend = b;
}

Backend detect_backend() {
    Backend b = avx2_supported() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("LUPISEG_KERNELS")) {
        const std::string requested = env;
        if (requested == "scalar") {
            b = Backend::scalar;
        } else if (requested == "avx2") {
            if (avx2_supported()) {
                b = Backend::avx2;
            } else {
                std::cerr << "LUPISEG_KERNELS=avx2 requested but CPU lacks AVX2+FMA; "
                             "using scalar kernels\n";
                b = Backend::scalar;
            }
        } else if (!requested.empty()) {
            std::cerr << "ignoring unknown LUPISEG_KERNELS value '" << requested << "'\n";
        }
    }
    return b;
}

State& state() {
    static State s = [] {
        State init;
        fill(init, detect_backend());
        return init;
    }();
    return s;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return avx2::compiled_in() && __builtin_cpu_supports("avx2") &&
           __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend backend() { return state().backend; }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw ArgumentError("AVX2 kernels unavailable on this CPU/build");
    fill(state(), b);
}

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

template <>
const Kernels<float>& active<float>() {
    return state().f32;
}

template <>
const Kernels<double>& active<double>() {
    return state().f64;
}

}  // namespace lupi::kern
