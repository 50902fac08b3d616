"""Traffic, break-even rounds and transfer times for 100 hospitals sharing a 25M-parameter model."""

import json

from dcalign.costmodel import CostParams, cost_report


def main():
    for p in (1.0, 0.1):
        params = CostParams.healthcare(p=p, beta=1e9, tau=0.05)
        rep = cost_report(params)
        print(f"p={p}: DC {rep['dc_traffic']}, FL per round {rep['fl_traffic']}, "
              f"R*={rep['break_even_rounds']:.3f} (ceil {rep['break_even_rounds_ceil']}), "
              f"T_DC={rep['transfer_time_s']['DC']:.1f} s")
    print(json.dumps(cost_report(CostParams.healthcare(p=0.1)), indent=2))


if __name__ == "__main__":
    main()
