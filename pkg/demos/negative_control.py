"""
A law that is not a Palm law, and how the checks expose it.

The single field W = (1, 1/2) on Z_2 looks harmless, but the exceedance
process of U*W is not mass-stationary: shifting by one site moves mass to a
field the law never produces.  The space-shift check names the offending
test function and the constructions refuse to build a tail measure.
"""

from palmtail.errors import SpaceShiftFailed
from palmtail.fixtures import negative_control
from palmtail.palm_calculus import check_mecke, failures
from palmtail.spectral import build_Q, check_space_shift, cross_validate, tail_from_weight

law = negative_control()
print("law:", law)

bad = failures(check_space_shift(law))
print(f"\nspace-shift: {len(bad)} failing reports; first few:")
for r in bad[:4]:
    print(f"  {r.function_id:40s} lhs={r.lhs:.4f} rhs={r.rhs:.4f}")

bad = failures(check_mecke(build_Q(law)))
print(f"\nMecke under the Pareto-radius law: {len(bad)} failing reports")
for r in bad[:3]:
    print(f"  {r.function_id:40s} lhs={r.lhs:.4f} rhs={r.rhs:.4f}")

print("\nboth verdicts agree:", cross_validate(law)["agree"])

try:
    tail_from_weight(law)
except SpaceShiftFailed as e:
    print("\nconstruction refused:", e)
