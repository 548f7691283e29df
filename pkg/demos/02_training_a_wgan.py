# %% [markdown]
# # Training a WGAN on the defaulters
#
# The generator only ever sees the minority class: standardized indicator rows
# of firms that defaulted. The critic is clipped to [-0.01, 0.01] after each of
# its five updates per generator step.

# %%
import numpy as np

from scf_ganlab.data import WorldConfig, make_reference_world, normalize, stratified_split
from scf_ganlab.gan import GanModel, TrainConfig, generate_records, train
from scf_ganlab.rng import Prng

world = make_reference_world(WorldConfig(n=2000, base_default_rate=0.2, seed=0))
train_split, _ = stratified_split(world, 0.8, seed=1)
train_split = normalize(train_split)
minority = train_split.matrix()[train_split.labels == 1]
print("minority rows:", minority.shape)

# %%
model = GanModel.build(n_features=15, mode="wasserstein", seed=2)
model, history = train(minority, TrainConfig(epochs=200, batch_size=32, seed=3), model)
print("critic updates:", history.critic_updates, "generator updates:", history.generator_updates)
w = history.column("wasserstein_estimate")
print("Wasserstein estimate, first/last 10 epochs: %.4f -> %.4f" % (w[:10].mean(), w[-10:].mean()))

# %% [markdown]
# Synthetic records come back in raw units. A quick sanity check compares
# per-indicator means against the real defaulters.

# %%
fake = generate_records(model, 500, train_split.norm_stats, rng=Prng(4))
fake_z = (np.array([r.indicators for r in fake]) - train_split.norm_stats.mean) / train_split.norm_stats.std
real_z = minority[:, :14]
print("largest mean gap (z units):", round(float(np.abs(fake_z.mean(0) - real_z.mean(0)).max()), 3))
print("std ratio range:", np.round((fake_z.std(0) / real_z.std(0))[[0, -1]], 2))
print("share breaching contracts, real vs fake:",
      round(float(1 - minority[:, 14].mean()), 3),
      round(float(np.mean([r.contract_status == 0 for r in fake])), 3))
