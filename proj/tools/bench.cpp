// Times the OpenMP kernels against the serial reference implementations and
// reports the per-kernel speedup plus the largest output discrepancy.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "turbmit/flow.hpp"
#include "turbmit/kernels.hpp"
#include "turbmit/reference.hpp"
#include "turbmit/rng.hpp"

using namespace turbmit;

namespace {

GrayImage random_image(int w, int h, uint64_t seed) {
    GrayImage img(w, h);
    Rng rng(seed);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

double time_best_of(int repeats, const std::function<void()>& fn) {
    double best = 1e30;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        best = std::min(best, dt);
    }
    return best;
}

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return worst;
}

void report(const std::string& name, double serial_s, double parallel_s, double diff) {
    std::printf("%-22s serial %8.2f ms   openmp %8.2f ms   speedup %5.2fx   max|diff| %.2e\n",
                name.c_str(), serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; both columns run serially\n");
#endif

    const GrayImage img256 = random_image(256, 256, 1);
    const GrayImage img512 = random_image(512, 512, 2);

    {
        const auto taps = kernels::gaussian_taps_1d(4.0);
        const int k = static_cast<int>(taps.size());
        std::vector<float> kern(static_cast<size_t>(k) * k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < k; ++i) kern[static_cast<size_t>(j) * k + i] = taps[j] * taps[i];
        GrayImage a, b;
        const double ts = time_best_of(3, [&] { a = reference::convolve2d(img256, kern, k); });
        const double tp = time_best_of(3, [&] { b = kernels::convolve2d(img256, kern, k); });
        report("convolve2d 25x25", ts, tp, max_abs_diff(a, b));
    }
    {
        GrayImage a, b;
        const double ts = time_best_of(3, [&] { a = reference::gaussian_blur(img512, 2.0); });
        const double tp = time_best_of(3, [&] { b = kernels::gaussian_blur(img512, 2.0); });
        report("gaussian_blur s=2", ts, tp, max_abs_diff(a, b));
    }
    {
        FlowField flowfield(512, 512);
        Rng rng(3);
        for (size_t i = 0; i < flowfield.size(); ++i) {
            flowfield.dx[i] = static_cast<float>(rng.uniform(-3.0, 3.0));
            flowfield.dy[i] = static_cast<float>(rng.uniform(-3.0, 3.0));
        }
        GrayImage a, b;
        const double ts = time_best_of(5, [&] { a = reference::warp_bilinear(img512, flowfield); });
        const double tp = time_best_of(5, [&] { b = kernels::warp_bilinear(img512, flowfield); });
        report("warp_bilinear", ts, tp, max_abs_diff(a, b));
    }
    {
        GrayImage a, b;
        const double ts = time_best_of(3, [&] { a = reference::box_mean(img512, 7); });
        const double tp = time_best_of(3, [&] { b = kernels::box_mean(img512, 7); });
        report("box_mean r=7", ts, tp, max_abs_diff(a, b));
    }
    {
        double a = 0, b = 0;
        const double ts = time_best_of(5, [&] { a = reference::tenengrad_sum(img512); });
        const double tp = time_best_of(5, [&] { b = kernels::tenengrad_sum(img512); });
        report("tenengrad_sum", ts, tp, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    {
        GrayImage amin, amax, bmin, bmax;
        const double ts = time_best_of(3, [&] {
            auto r = reference::local_min_max(img512, 16);
            amin = std::move(r.first);
            amax = std::move(r.second);
        });
        const double tp = time_best_of(3, [&] {
            auto r = kernels::local_min_max(img512, 16);
            bmin = std::move(r.first);
            bmax = std::move(r.second);
        });
        report("local_min_max r=16", ts, tp,
               std::max(max_abs_diff(amin, bmin), max_abs_diff(amax, bmax)));
    }
    {
        // End-to-end flow estimate; there is no serial reference for the full
        // pyramid, so time one call at 1 thread vs all threads.
        FlowField shift(256, 256);
        for (auto& v : shift.dx) v = 2.0f;
        const GrayImage moving = kernels::warp_bilinear(img256, shift);
        flow::FlowParams params;
        double ts, tp;
#ifdef _OPENMP
        const int saved = omp_get_max_threads();
        omp_set_num_threads(1);
        ts = time_best_of(2, [&] { flow::estimate_flow(moving, img256, params); });
        omp_set_num_threads(saved);
        tp = time_best_of(2, [&] { flow::estimate_flow(moving, img256, params); });
#else
        ts = tp = time_best_of(2, [&] { flow::estimate_flow(moving, img256, params); });
#endif
        report("estimate_flow 256px", ts, tp, 0.0);
    }
    return 0;
}
