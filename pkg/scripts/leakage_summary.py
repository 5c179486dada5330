"""Message accuracy of Alice and Eve when the verification phase is skipped.

    python scripts/leakage_summary.py --bits 4000
"""

import argparse

from qsdc.adversary import leakage_report
from qsdc.protocol import SessionConfig, run_session


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bits", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    print(f"{'adversary':<10} {'alice_acc':>10} {'eve_acc':>10}   (4-sigma half-widths)")
    for adv in ("none", "swap", "ghz", "ir"):
        cfg = SessionConfig(seed=args.seed, n_message_bits=args.bits, test_pairs=0, adversary=adv)
        rep = leakage_report([run_session(cfg)])
        print(f"{adv:<10} {rep.alice_bit_accuracy:>10.4f} {rep.eve_bit_accuracy:>10.4f}"
              f"   (+/-{rep.alice_ci:.4f}, +/-{rep.eve_ci:.4f})")


if __name__ == "__main__":
    main()
