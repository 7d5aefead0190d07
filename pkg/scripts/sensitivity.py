"""ATT bounds over a grid of lambda for a run-config file or a single DID estimate.

    python scripts/sensitivity.py --config scripts/example_run.cfg
    python scripts/sensitivity.py --theta -0.1537 --lambdas 0.07,0.125
"""

import argparse

from misdid.dataio import load_config
from misdid.identification import att_bounds
from misdid.montecarlo import run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="key = value run file")
    src.add_argument("--theta", type=float, help="DID estimate")
    ap.add_argument("--lambdas", default="0,0.05,0.1,0.2,0.3,0.4,0.5")
    args = ap.parse_args(argv)

    lambdas = [float(x) for x in args.lambdas.split(",")]
    if args.config:
        cfg = load_config(args.config)
        res = run_experiment(cfg)
        theta = res.did_observed
        print(f"{cfg.design.mode.value}/{cfg.design.panel.value} rate={cfg.design.target_rate:g}: "
              f"DID true {res.did_true:.3f}, observed {theta:.3f}")
    else:
        theta = args.theta
    for lam in lambdas:
        b = att_bounds(theta, lam)
        print(f"lambda={lam:<6g} ({b.lower:.4f} , {b.upper:.4f})  width={b.width:.4f}")


if __name__ == "__main__":
    main()
