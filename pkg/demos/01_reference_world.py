# %% [markdown]
# # The reference world
#
# Real supply-chain-finance records are private, so everything here runs on a
# seeded synthetic population whose default probabilities are known exactly.
# Each firm belongs to one of three industries, draws 14 correlated financial
# indicators from an industry-specific Gaussian, and defaults with a logistic
# probability of its standardized indicators.

# %%
import numpy as np

from scf_ganlab.data import (NUMERIC_FEATURES, WorldConfig, make_reference_world, normalize,
                             stratified_split)
from scf_ganlab.metrics import roc_and_auc

world = make_reference_world(WorldConfig(n=2000, seed=0))
print(len(world), "firms;", world.class_counts(), "(0 = repaid, 1 = default)")
print("mean ground-truth default probability:", round(float(world.ground_truth_p.mean()), 4))

# %% [markdown]
# The intercept was solved for so the population default rate is 5%. The
# sample rate wobbles around it.

# %%
for name in ("Steel", "PharmaDistribution", "ECommerce"):
    rows = world.industries == name
    print(f"{name:20s} n={rows.sum():4d}  default rate={world.labels[rows].mean():.3f}")

# %% [markdown]
# Which indicators separate defaulters? Compare class means in z-score units.

# %%
z = normalize(world)
gap = z.numeric[z.labels == 1].mean(axis=0) - z.numeric[z.labels == 0].mean(axis=0)
for k in np.argsort(gap)[:5]:
    print(f"{NUMERIC_FEATURES[k]:36s} {gap[k]:+.2f}")

# %% [markdown]
# No classifier can beat a scorer that knows the true probability. That
# ceiling is the AUC of ``ground_truth_p`` itself.

# %%
train, test = stratified_split(world, 0.8, seed=1)
print("train", train.class_counts(), "test", test.class_counts())
print("Bayes-optimal test AUC:", round(roc_and_auc(test.labels, test.ground_truth_p)[1], 4))

strong = make_reference_world(WorldConfig.strong_signal(seed=0))
print("strong-signal world Bayes AUC:", round(roc_and_auc(strong.labels, strong.ground_truth_p)[1], 4))
