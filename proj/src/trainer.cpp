// Copyright 2026 The fewpoint Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fewpoint/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "fewpoint/errors.hpp"
#include "fewpoint/metrics.hpp"
#include "fewpoint/ops.hpp"
#include "fewpoint/optim.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

namespace {

std::vector<std::pair<std::string, Tensor>> named_group(const Model& model,
                                                        const std::vector<std::string>& prefixes) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& [name, t] : model.params().entries()) {
    for (const auto& p : prefixes) {
      if (name.rfind(p, 0) == 0) {
        out.emplace_back(name, t);
        break;
      }
    }
  }
  return out;
}

// Restores a group optimizer from the saved state, or starts it fresh.
Adam make_optimizer(const Model& model, const std::vector<std::string>& prefixes,
                    const std::string& name, const TrainState& state) {
  Adam opt(named_group(model, prefixes), adam_config(model.config().train));
  if (const OptimizerState* saved = state.find(name)) {
    const auto& params = opt.params();
    if (saved->moments.size() != params.size()) {
      throw ContractError("resume: optimizer '" + name + "' covers " +
                          std::to_string(saved->moments.size()) + " parameters, expected " +
                          std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (saved->moments[i].first != params[i].first) {
        throw ContractError("resume: optimizer '" + name + "' parameter order differs at '" +
                            params[i].first + "'");
      }
      opt.moments()[i] = saved->moments[i].second;
    }
    opt.set_steps(saved->steps);
  }
  return opt;
}

OptimizerState snapshot(const Adam& opt, const std::string& name) {
  OptimizerState s;
  s.name = name;
  s.steps = opt.steps();
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    s.moments.emplace_back(opt.params()[i].first, opt.moments()[i]);
  }
  return s;
}

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

void check_stage_order(const Model& model, const TrainState& state, int stage) {
  if (stage < 1 || stage > 3) throw ContractError("train: stage must be 1, 2 or 3");
  const int done = model.completed_stage();
  if (done >= stage) {
    throw ContractError("train: stage " + std::to_string(stage) +
                        " is already complete in this checkpoint (completed stage " +
                        std::to_string(done) + ")");
  }
  if (done != stage - 1) {
    throw ContractError("train: stage " + std::to_string(stage) + " requires a stage-" +
                        std::to_string(stage - 1) + " checkpoint, but the model has completed stage " +
                        std::to_string(done));
  }
  (void)state;
}

using Clock = std::chrono::steady_clock;

}  // namespace

TrainingSample make_training_sample(std::string sample_id, std::string class_label,
                                    const PointCloud& gt, const std::vector<PointCloud>& views,
                                    std::size_t coarse_n) {
  if (views.empty()) throw ContractError("training sample '" + sample_id + "' has no views");
  if (gt.size() < coarse_n) {
    throw ContractError("training sample '" + sample_id + "': " + std::to_string(gt.size()) +
                        " ground-truth points cannot supply " + std::to_string(coarse_n) +
                        " coarse targets");
  }
  TrainingSample s;
  s.sample_id = std::move(sample_id);
  s.class_label = std::move(class_label);
  s.gt_cloud = gt;
  s.gt = gt.to_tensor();
  s.gt_coarse = gt.select(farthest_point_sample(gt, coarse_n, 0)).to_tensor();
  s.view_clouds = views;
  for (const auto& v : views) s.views.push_back(v.to_tensor());
  return s;
}

TrainingSample make_training_sample(const SamplePair& pair, std::size_t coarse_n) {
  return make_training_sample(pair.sample_id, pair.class_label, pair.gt, {pair.partial}, coarse_n);
}

TrainingSet load_split(const DatasetManifest& manifest, const std::string& split,
                       std::size_t coarse_n) {
  TrainingSet out;
  for (const ManifestEntry* e : manifest.split(split)) {
    std::vector<PointCloud> views;
    for (const auto& p : e->partial_paths) views.push_back(read_xyz(manifest.root / p));
    out.push_back(make_training_sample(e->sample_id, e->class_label,
                                       read_xyz(manifest.root / e->gt_path), views, coarse_n));
  }
  return out;
}

Tensor distance_loss(DistanceKind kind, const Tensor& a, const Tensor& b,
                     const TrainConfig& train) {
  if (kind == DistanceKind::kChamfer) return chamfer_loss(a, b, train.cd_squared);
  const PointCloud pa = PointCloud::from_tensor(a), pb = PointCloud::from_tensor(b);
  const Assignment m = emd_auction(pa, pb, train.emd_epsilon);
  return emd_loss(a, b, m);
}

Tensor completion_loss(const Tensor& coarse, const Tensor& detail, const Tensor& gt_coarse,
                       const Tensor& gt, double alpha, const TrainConfig& train) {
  const Tensor d1 = distance_loss(train.d1, coarse, gt_coarse, train);
  if (alpha == 0.0) return d1;
  return add(d1, scale(distance_loss(train.d2, detail, gt, train), alpha));
}

namespace {

Tensor thin_input(const Tensor& points, const TrainConfig& train, Rng& rng) {
  const std::size_t n = points.dim(0);
  const std::size_t lo = train.input_subsample_min;
  if (lo == 0 || lo >= n) return points;
  const std::size_t k = lo + rng.below(n - lo + 1);
  return random_subsample(PointCloud::from_tensor(points), k, rng.next_u64()).to_tensor();
}

void notify(const StageOptions& options, const char* optimizer, bool after) {
  if (options.on_update) options.on_update(optimizer, after);
}

}  // namespace

void train_stage(Model& model, TrainState& state, int stage, const TrainingSet& data,
                 const StageOptions& options) {
  check_stage_order(model, state, stage);
  if (data.empty()) throw ContractError("train: the training set is empty");
  const TrainConfig& train = model.config().train;
  const std::size_t total = train.epochs_for(stage);

  if (state.stage != stage) {
    // Fresh stage: new optimizer state and a stage-specific stream.
    state.stage = stage;
    state.epoch = 0;
    state.optimizers.clear();
    state.rng_state = Rng(derive_seed(train.seed, "train:stage" + std::to_string(stage))).state();
  }
  if (stage == 2 && !model.has_gan()) {
    state.epoch = total;
    model.set_completed_stage(2);
    return;
  }

  Rng rng;
  rng.set_state(state.rng_state);
  const GradModeGuard recording(true);

  std::vector<std::string> main_groups{kEncoderPrefix, kDecoderPrefix};
  if (stage == 3 && model.has_gan()) main_groups.push_back(kGeneratorPrefix);
  const bool stage3_critic = stage == 3 && model.has_gan() && train.stage3_train_discriminator;

  Adam main_opt, critic_opt, gen_opt;
  if (stage == 1 || stage == 3) main_opt = make_optimizer(model, main_groups, kMainOptimizer, state);
  if (stage == 2 || stage3_critic) {
    critic_opt = make_optimizer(model, {kDiscriminatorPrefix}, kCriticOptimizer, state);
  }
  if (stage == 2) gen_opt = make_optimizer(model, {kGeneratorPrefix}, kGeneratorOptimizer, state);

  // Stage 2 works on frozen-encoder features, computed once.
  std::vector<std::vector<Tensor>> view_features;
  std::vector<Tensor> gt_features;
  if (stage == 2) {
    NoGradGuard ng;
    for (const auto& s : data) {
      gt_features.push_back(model.encode(s.gt));
      std::vector<Tensor> fv;
      if (train.input_subsample_min == 0) {
        for (const auto& v : s.views) fv.push_back(model.encode(v));
      }
      view_features.push_back(std::move(fv));
    }
  }

  const std::vector<Tensor> disc_params = model.has_gan() ? model.group(kDiscriminatorPrefix)
                                                          : std::vector<Tensor>{};
  const std::size_t stop =
      options.max_epochs ? std::min(total, state.epoch + *options.max_epochs) : total;
  const std::size_t bs = train.batch_size;

  while (state.epoch < stop) {
    const auto t0 = Clock::now();
    const std::size_t epoch = state.epoch;
    const double lr = lr_schedule(train, epoch);
    const double alpha = stage == 1 ? detail_weight(train, epoch, total) : train.detail_weight_end;
    const std::vector<std::size_t> order = shuffled_order(data.size(), rng);
    double loss_sum = 0.0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += bs) {
      const std::size_t b1 = std::min(order.size(), b0 + bs);
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      std::vector<std::size_t> view(b1 - b0);
      for (std::size_t i = b0; i < b1; ++i) view[i - b0] = rng.below(data[order[i]].views.size());

      if (stage == 2) {
        std::vector<Tensor> xs, ys, fakes;
        for (std::size_t i = b0; i < b1; ++i) {
          if (train.input_subsample_min > 0) {
            const NoGradGuard ng;
            xs.push_back(model.encode(thin_input(data[order[i]].views[view[i - b0]], train, rng)));
          } else {
            xs.push_back(view_features[order[i]][view[i - b0]]);
          }
          ys.push_back(gt_features[order[i]]);
        }
        for (std::size_t c = 0; c < model.config().gan.critic_steps; ++c) {
          {
            NoGradGuard ng;
            fakes.clear();
            for (const auto& x : xs) fakes.push_back(model.generator().generate(x));
          }
          const CriticLossTerms terms = discriminator_loss(model.critic_fn(), ys, fakes,
                                                           model.config().gan.gp_lambda,
                                                           rng.next_u64());
          notify(options, kCriticOptimizer, false);
          critic_opt.zero_grad();
          backward(terms.loss);
          critic_opt.step(lr);
          notify(options, kCriticOptimizer, true);
        }
        notify(options, kGeneratorOptimizer, false);
        const ScopedFreeze freeze(disc_params);
        const GeneratorLossTerms g =
            generator_loss(model.generator(), model.critic_fn(), xs, ys, model.config().gan);
        gen_opt.zero_grad();
        backward(g.loss);
        gen_opt.step(lr);
        notify(options, kGeneratorOptimizer, true);
        loss_sum += g.loss.item() * static_cast<double>(b1 - b0);
        continue;
      }

      notify(options, kMainOptimizer, false);
      main_opt.zero_grad();
      // Frozen through backward too: the engine checks requires_grad there.
      std::unique_ptr<ScopedFreeze> freeze;
      if (stage == 3 && model.has_gan()) freeze = std::make_unique<ScopedFreeze>(disc_params);
      std::vector<Tensor> real_feats, fake_feats;
      for (std::size_t i = b0; i < b1; ++i) {
        const TrainingSample& s = data[order[i]];
        const Tensor input = thin_input(s.views[view[i - b0]], train, rng);
        Tensor loss;
        if (stage == 1) {
          const DecodedClouds out = model.forward(input, false);
          loss = completion_loss(out.coarse, out.detail, s.gt_coarse, s.gt, alpha, train);
        } else {
          const bool through = model.has_gan();
          const Tensor x = model.encode(input);
          const Tensor g = through ? model.generator().generate(x) : x;
          const DecodedClouds out = model.decoder().decode(g);
          loss = completion_loss(out.coarse, out.detail, s.gt_coarse, s.gt, alpha, train);
          if (through) {
            Tensor y;
            {
              NoGradGuard ng;
              y = model.encode(s.gt);
            }
            if (train.stage3_l1_weight > 0.0) {
              loss = add(loss, scale(l1_norm(sub(y, g)), train.stage3_l1_weight));
            }
            if (stage3_critic) {
              const auto& gan = model.config().gan;
              loss = add(loss, scale(bce(sigmoid(model.critic(g)), 1.0, gan.literal_bce),
                                     gan.alpha));
              real_feats.push_back(y);
              fake_feats.push_back(g.detach());
            }
          }
        }
        loss_sum += loss.item();
        backward(scale(loss, inv));
      }
      main_opt.step(lr);
      freeze.reset();
      notify(options, kMainOptimizer, true);
      if (stage3_critic) {
        const CriticLossTerms terms = discriminator_loss(model.critic_fn(), real_feats, fake_feats,
                                                         model.config().gan.gp_lambda,
                                                         rng.next_u64());
        notify(options, kCriticOptimizer, false);
        critic_opt.zero_grad();
        backward(terms.loss);
        critic_opt.step(lr);
        notify(options, kCriticOptimizer, true);
      }
    }

    const double mean_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      throw ConvergenceError("train: stage " + std::to_string(stage) + " epoch " +
                             std::to_string(epoch) + " produced a non-finite loss");
    }
    ++state.epoch;
    state.rng_state = rng.state();
    state.optimizers.clear();
    if (stage == 1 || stage == 3) state.optimizers.push_back(snapshot(main_opt, kMainOptimizer));
    if (stage == 2 || stage3_critic) state.optimizers.push_back(snapshot(critic_opt, kCriticOptimizer));
    if (stage == 2) state.optimizers.push_back(snapshot(gen_opt, kGeneratorOptimizer));

    if (options.on_epoch) {
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      options.on_epoch(EpochLog{stage, epoch, mean_loss, lr, secs});
    }
  }
  model.params().zero_grad();
  if (state.epoch >= total) model.set_completed_stage(stage);
}

std::string epoch_log_header() { return "epoch,stage,loss,lr,seconds"; }

std::string epoch_log_row(const EpochLog& log) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%d,%.9g,%.9g,%.3f", log.epoch, log.stage, log.loss, log.lr,
                log.seconds);
  return buf;
}

}  // namespace fewpoint
