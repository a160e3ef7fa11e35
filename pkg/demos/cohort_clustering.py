"""Simulate a cohort, profile every session and try to recover the archetypes.

Run with ``python demos/cohort_clustering.py [seed]``.
"""
import sys
from collections import Counter

import numpy as np

from learnerprofiles.clustering import adjusted_rand_index, fcm, hac, kmeans
from learnerprofiles.fuzzy import INDEX_NAMES
from learnerprofiles.pipeline import learner_mtslps, mean_features, profile_sessions, simulate_cohort
from learnerprofiles.similarity import similarity_matrix

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
cohort = simulate_cohort(seed, n_learners=24, group_size=4, n_sessions=8)
print(f"seed {seed}: {len(cohort.logs)} sessions across {len(cohort.groups)} groups")
print("archetypes:", dict(Counter(cohort.archetypes.values())))

profiles = profile_sessions(cohort.logs)
mtslps = learner_mtslps(profiles)
learners, features = mean_features(mtslps)
truth = [cohort.archetypes[l] for l in learners]

print("\nmean profile per archetype")
print(" " * 13 + "".join(f"{n:>14}" for n in INDEX_NAMES))
for arch in sorted(set(truth)):
    rows = features[[t == arch for t in truth]]
    print(f"{arch:<13}" + "".join(f"{v:>14.2f}" for v in rows.mean(axis=0)))

results = {
    "k-means": kmeans(features, 3, seed).labels,
    "fuzzy c-means": fcm(features, 3, seed=seed).labels,
    "average-linkage HAC": hac(features).cut(3),
}
print("\nagreement with the generator's archetypes (adjusted Rand index)")
for name, labels in results.items():
    print(f"  {name:<22} {adjusted_rand_index(labels, truth):.2f}")

# Eros compares the shape of each learner's session-to-session variation,
# not its level, so it answers a different question than the mean features.
sim = similarity_matrix(list(mtslps.values()), "eros", strict=False)
eros_truth = [cohort.archetypes[l] for l in sim.learners]
eros_labels = hac(distances=1.0 - sim.values).cut(3)
print(f"  {'Eros + HAC':<22} {adjusted_rand_index(eros_labels, eros_truth):.2f}")

soft = fcm(features, 3, seed=seed)
most_torn = int(np.argmin(soft.memberships.max(axis=1)))
print(f"\nleast decided learner under fuzzy c-means: {learners[most_torn]} "
      f"({cohort.archetypes[learners[most_torn]]}), memberships {np.round(soft.memberships[most_torn], 2)}")
