"""Two mutually exclusive sites, each of weight 1/2.

The exact law puts 1/2 on the empty configuration and 1/4 on each single
site.  Here alpha equals 1, so the sampler has to be forced past the
certificate; the clans stay finite anyway.
"""
from collections import Counter

from clansim.cleaner import perfect_sample
from clansim.discrete import toy_hardcore
from clansim.oracle import compare, enumerate_exact
from clansim.randomness import RandomStream

m = toy_hardcore({"a": 0.5, "b": 0.5}, [("a", "b")])
law = enumerate_exact(m)
root = RandomStream(2024)

n = 20000
counts = Counter(perfect_sample(m, None, root.derive(i), force=True)[0].key() for i in range(n))
print("configuration    exact   sampled")
for k in law.keys:
    name = "+".join(label for label, _ in k) or "empty"
    print(f"{name:<14} {law.prob(k):7.4f}   {counts[k] / n:7.4f}")

rep = compare(lambda i: perfect_sample(m, None, root.derive(n + i), force=True)[0], law, n)
print(rep.text())
