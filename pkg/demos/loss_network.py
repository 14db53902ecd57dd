"""Calls of length 1 on a line with capacity 1: a hard-rod gas.

At arrival rate 0.2, the fraction of time the origin is busy is p/(1+p),
where p solves p = 0.2 exp(-p).  The clan sampler gives an exact draw from
the stationary state near the origin.
"""
import math

import numpy as np
from scipy.optimize import brentq

from clansim.cleaner import perfect_sample
from clansim.continuous import LengthLaw, lossnet_model
from clansim.diagnostics import alpha
from clansim.model import Box
from clansim.randomness import RandomStream

m = lossnet_model(0.2, LengthLaw("fixed", L=1.0), 1)
print(alpha(m).text())

origin = Box((0.0,), (0.0,))
root = RandomStream(7)
busy = np.array([len(perfect_sample(m, origin, root.derive(i))[0]) for i in range(20000)])
p = brentq(lambda x: x - 0.2 * math.exp(-x), 0.0, 1.0)
print(f"origin busy: sampled {busy.mean():.4f} +/- {busy.std() / math.sqrt(len(busy)):.4f}, "
      f"hard-rod value {p / (1 + p):.4f}")
