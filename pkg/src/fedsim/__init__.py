"""Deterministic desk-scale simulator of staleness-aware federated learning.

Subpackages and modules:
  kernels      compiled/NumPy minibatch loss+gradient backends
  models       tiny differentiable models and SGD
  data         synthetic datasets and Dirichlet partitioning
  aggregation  staleness-aware weight math and control updates
  slot_policy  fresh-model request-slot selection (softmax meta + Q)
  engine       discrete-event simulator for all protocols
  harness      experiment configs, sweeps, and summaries
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
