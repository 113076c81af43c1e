"""
Plot the artifacts of one ``nhrotor`` output directory.

    python demos/plot_run.py runs/fig1a_lambda0 [--save fig.png]

Needs matplotlib (``pip install nhrotor[plot]``).
"""

import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from nhrotor.experiments import read_csv


def column(rows, header, name):
    j = header.index(name)
    return np.array([float(r[j]) if r[j] else np.nan for r in rows])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--save")
    args = ap.parse_args()
    out = Path(args.out)

    _, header, rows = read_csv(out / "timeseries.csv")
    t = column(rows, header, "step")
    fig, (a, b, c) = plt.subplots(1, 3, figsize=(13, 3.8))

    a.plot(t, column(rows, header, "p1_sq"), label="quantum")
    cl = column(rows, header, "classical_p1_sq")
    if np.isfinite(cl).any():
        a.plot(t, cl, "--", label="classical")
    a.set_xlabel("t")
    a.set_ylabel(r"$\langle p_1^2\rangle$")
    a.legend()

    S = column(rows, header, "entropy")
    ok = np.isfinite(S)
    b.plot(t[ok], S[ok], "o-")
    b.set_xlabel("t")
    b.set_ylabel("linear entropy")

    for path in sorted(out.glob("marginal_t*.csv"), key=lambda p: int(p.stem.split("_t")[1])):
        _, h, r = read_csv(path)
        P = column(r, h, "P")
        c.semilogy(column(r, h, "p"), np.where(P > 0, P, np.nan), label=path.stem.split("_")[1])
    c.set_xlabel("p")
    c.set_ylabel(r"$P(p_1)$")
    c.legend(fontsize=7)

    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
