"""Regenerate the bundled 56-bus demo feeder and its scenario file.

The bundled data is frozen output of the synthetic feeder generator; this
script exists so the provenance of ``src/gridbarrier/data`` stays auditable
and reproducible:

    python3 scripts/build_bundled_data.py

The chosen seeds give a feeder whose uncontrolled voltage rise clearly
exceeds the 5% limit and a ~50% relative model error under which the
barrier controller still converges safely while the primal-dual baseline
keeps violating the limit.
"""

from __future__ import annotations

from pathlib import Path

from gridbarrier.netmodel import generate_synthetic_feeder, write_network_csv

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "gridbarrier" / "data"

NET_SEED = 112
OVERLOAD_FACTOR = 1.5
PERTURB_KIND = "both"
PERTURB_MAGNITUDE = 2.8125
PERTURB_SEED = 4

SCENARIO_TEXT = f"""\
# Bundled demo: overloaded 56-bus feeder controlled through a model with
# roughly 50% relative error (realized, not assumed). The certainty-
# equivalence QP on the estimate is expected to fail here -- the estimate
# is corrupted beyond the solver's admissible class -- while the barrier
# controller still converges to a safe optimum.

[network]
file = feeder56.csv

[perturbation]
kind = {PERTURB_KIND}
magnitude = {PERTURB_MAGNITUDE}
seed = {PERTURB_SEED}

[controller]
beta = 200
kappa = 0.6
c_p = 3
c_q = 1
x_limit_pct = 5
max_steps = 12000

[limits]
reactive_fraction = 0.4

[baselines]
primal_dual = true
lcqp = true
pd_max_steps = 20000

[output]
nominal_kv = 12.0
"""


def main() -> None:
    net = generate_synthetic_feeder(56, seed=NET_SEED, overload_factor=OVERLOAD_FACTOR)
    write_network_csv(net, DATA_DIR / "feeder56.csv")
    (DATA_DIR / "scenario_56bus.cfg").write_text(SCENARIO_TEXT, encoding="utf-8")
    print(f"wrote {DATA_DIR / 'feeder56.csv'}")
    print(f"wrote {DATA_DIR / 'scenario_56bus.cfg'}")


if __name__ == "__main__":
    main()
