# %% [markdown]
# # An obstruction to linearization stability on CP1 x CP1
#
# On the product of two unit spheres the Chern scalar curvature is the
# constant 4.  The height function ``u`` of the first factor is in the
# kernel of ``gamma^*`` and ``h = (1 + u)(Id_1 + (-Id_2))`` is in the kernel of
# ``gamma``.  If the scalar curvature map were linearization stable there,
# the integral of ``u`` times the second variation in the direction ``h``
# would vanish.  It equals ``128 pi^2 / 3`` instead.

# %%
import numpy as np

from chernlab import adjointness_test, instability_witness, zoo
from chernlab.linearization import WITNESS_VALUE

# %% [markdown]
# ## Adjointness first
#
# The witness relies on ``gamma^*`` being the formal adjoint of ``gamma``.
# We check it by quadrature on random smooth pairs.

# %%
report = adjointness_test(zoo("cp1xcp1"), n=16)
print(f"worst relative defect: {report.max_rel_err:.2e}  passed: {report.passed}")

# %% [markdown]
# ## The witness and its controls
#
# Gauss-Legendre order 8 in ``cos theta`` is already exact for this
# polynomial integrand; order 32 is the reference setting.

# %%
witness = instability_witness(n=8)
print("value      ", witness.value)
print("closed form", WITNESS_VALUE)
print("relative   ", abs(witness.value / WITNESS_VALUE - 1))
print("residuals  ", {k: float(v) for k, v in witness.residuals.items()})

# %% [markdown]
# The constant traceless direction ``Id_1 + (-Id_2)`` has zero second
# variation, so its integral vanishes.

# %%
control = instability_witness(n=8, constant_h=True)
print("control value", control.value)

# %% [markdown]
# A shifted ``u`` is no longer in the kernel of ``gamma^*``, and the
# pipeline refuses to quote an integral.

# %%
try:
    instability_witness(n=8, u_shift=0.5)
except Exception as exc:
    print(type(exc).__name__, exc)
