"""Perfect sampling of infinite-volume birth-and-death processes through the
clan of ancestors of a window, with finite-volume and enumeration oracles."""
from .clan import Clan, Cylinder, Limits, NotSubcritical, TruncatedClan, build_clan
from .cleaner import clean, perfect_sample, project
from .continuous import (AreaInteractionModel, Grain, LengthLaw, LossNetworkModel, StraussModel,
                         area_model, lossnet_model, strauss_model)
from .diagnostics import BiasLedger, alpha, bias_bound, bias_ledger_summary, generation_decay_check
from .discrete import ContourModel, RandomClusterModel, ToyModel, toy_free, toy_hardcore
from .finite_volume import simulate_forward, stationary_window, two_sweep
from .model import Ball, Box, Configuration, LabelSet, ModelSpec
from .oracle import ExactLaw, chisq_gof, compare, enumerate_exact, exact_sample, tv_distance
from .randomness import RandomStream, derive_stream, next_exponential, next_uniform, sample_first_event

__version__ = "0.1.0"
