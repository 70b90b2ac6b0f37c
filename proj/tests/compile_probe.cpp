#include "jepa/trainer.hpp"
#include <chrono>
#include <iostream>

using namespace jepa;
using Clock = std::chrono::steady_clock;

template <class F>
double time_ms(F&& f, int iters) {
  auto t0 = Clock::now();
  for (int i = 0; i < iters; ++i) f();
  return std::chrono::duration<double>(Clock::now() - t0).count() / iters * 1e3;
}

int main() {
  ModelConfig mc;
  ModelParams<float> theta = make_model_params<float>(mc);
  Rng rng(1);
  init_model(theta, rng);

  Rng fr(7);
  std::vector<std::shared_ptr<Frame>> frames;
  for (int i = 0; i < 4; ++i) {
    Frame f(84, 84);
    for (Index k = 0; k < f.size(); ++k) f.data()[k] = (float)fr.uniform();
    frames.push_back(std::make_shared<Frame>(f));
  }
  ObservationWindow w{WindowKind::X, {frames[0], frames[1], frames[2]}};
  const int B = 64;
  std::vector<const ObservationWindow*> batch(B, &w);

  EncoderCache<float> cache;
  Mat<float> ctx;
  encoder_forward(mc.encoder, theta.encoder, batch, cache, ctx);
  std::cout << "fwd B=64: " << time_ms([&]{ encoder_forward(mc.encoder, theta.encoder, batch, cache, ctx); }, 10) << " ms\n";

  EncoderParams<float> g = make_encoder_params<float>(mc.encoder);
  zero_tensors<float>(g);
  Mat<float> ds = Mat<float>::Ones(B, 64);
  encoder_backward(mc.encoder, theta.encoder, cache, ds, g);
  std::cout << "bwd B=64: " << time_ms([&]{ encoder_backward(mc.encoder, theta.encoder, cache, ds, g); }, 10) << " ms\n";
  return 0;
}
