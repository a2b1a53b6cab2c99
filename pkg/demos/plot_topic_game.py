"""
A five-person topic game
========================

Each member picks one topic. Interest in a topic is split among everyone
who picks it, and picking a topic one is socially nudged towards but not
interested in costs something. Sequential best responses settle on a
profile nobody wants to leave, and the topic shares of that profile are the
recommendation.
"""

import numpy as np

from grouprec.game import GameConfig, NormalizedModel, find_equilibrium, is_nash, recommend

rng = np.random.default_rng(0)
members, D = 5, 4
interest = rng.random((members, D))
social = rng.random((members, D))
interest[:, 2] += 0.6   # a topic everyone likes
models = NormalizedModel(interest / interest.max(), social)

cfg = GameConfig(eta1=0.6, eta2=0.4, n=2.0, seed=0)
eq = find_equilibrium(range(members), models, cfg)
print("favourite topics :", interest.argmax(axis=1))
print("equilibrium      :", eq.strategies, f"after {eq.rounds_used} round(s)")
print("Nash             :", is_nash(eq.profile, models, cfg))
print("recommendation   :", np.round(recommend(eq.profile, D), 3))

###############################################################################
# Congestion spreads people out: with everyone favouring topic 2 the shared
# payoff shrinks and three of the five members settle elsewhere.
