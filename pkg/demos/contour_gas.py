"""Low-temperature contours on a 20x20 box and the shape of a typical clan."""
from collections import Counter

from clansim.clan import build_clan, clan_generations
from clansim.cleaner import perfect_sample
from clansim.diagnostics import alpha
from clansim.discrete import ContourModel
from clansim.model import Box
from clansim.randomness import RandomStream

m = ContourModel(1.0, 8)
w = Box((0.0, 0.0), (20.0, 20.0))
print(alpha(m).text())

root = RandomStream(11)
sizes = Counter()
depths = []
for i in range(2000):
    cfg, clan = perfect_sample(m, w, root.derive(i))
    sizes.update(len(g.shape) for g in cfg)
    depths.append(len(clan_generations(clan, m)))
print("contours by enclosed area:", dict(sorted(sizes.items())))
print("mean number of clan generations:", sum(depths) / len(depths))

clan = build_clan(m, w, RandomStream(12))
print(f"one clan: {len(clan.cylinders)} cylinders, reaching back to time {clan.depth:.2f}")
