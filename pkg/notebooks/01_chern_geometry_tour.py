# %% [markdown]
# # A tour of Chern geometry on the manifold zoo
#
# Every manifold in the zoo is a closed-form Hermitian metric on a chart.
# Evaluating the metric as a second-order jet gives everything needed for
# the Chern connection, its curvature, the Lee form and the Chern scalar
# curvature at a batch of points.

# %%
import numpy as np

from chernlab import ZOO, ChernGeometry, fce_residual, jet_eval, zoo
from chernlab.manifolds import make_rng

# %% [markdown]
# ## Scalar curvature and Kahler defect across the zoo
#
# For each manifold we sample a few points and report the range of the
# Chern scalar curvature, the size of the Lee form (zero exactly when the
# metric is Kahler) and the first-Chern-Einstein residual.

# %%
for name in ZOO:
    spec = zoo(name)
    pts = spec.sample(make_rng(0, "tour", name), 50)
    geo = ChernGeometry(jet_eval(spec, spec.metric, pts, 2))
    scal = geo.scal
    lee = np.max(np.abs(geo.theta))
    print(
        f"{name:18s} m={spec.m}  scal in [{scal.min(): .6f}, {scal.max(): .6f}]"
        f"  max|theta|={lee:.2e}  fce={np.max(fce_residual(geo)):.2e}"
    )

# %% [markdown]
# ## The Hopf surface
#
# The metric ``|z|^-2`` on the punctured plane descends to the Hopf
# surface.  It is not Kahler, since its Lee form is nowhere zero, yet the
# Lee form is coclosed and the Chern scalar curvature is constant.

# %%
hopf = zoo("hopf")
pts = hopf.sample(make_rng(1, "tour", "hopf"), 5)
geo = ChernGeometry(jet_eval(hopf, hopf.metric, pts, 2))
print("scal      ", geo.scal)
print("d^* theta ", geo.dstar_theta)
print("|theta_i|  ", np.abs(geo.theta))

# %% [markdown]
# ## Round spheres
#
# On the unit Fubini-Study sphere the Chern connection equals the
# Levi-Civita connection and the Chern scalar curvature is twice the
# Gaussian curvature; on the product of two spheres it is 4.

# %%
for name in ("cp1", "cp1xcp1"):
    spec = zoo(name)
    pts = spec.sample(make_rng(2, "tour", name), 1000)
    geo = ChernGeometry(jet_eval(spec, spec.metric, pts, 2))
    print(name, "scal spread:", np.ptp(geo.scal), "mean:", geo.scal.mean())
