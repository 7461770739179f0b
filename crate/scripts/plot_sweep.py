#!/usr/bin/env python3
"""Plot a trispdc sweep CSV.

One-dimensional sweeps (single beta_omega1) are drawn as curves against gt;
two-dimensional sweeps as a colour map of the chosen column.

    python scripts/plot_sweep.py out/vacuum_coupling.csv
    python scripts/plot_sweep.py out/witness_map.csv --column i_chi --out i_chi.png
"""

import argparse

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("--column", default="i_chi", help="column for 2-D colour maps")
    ap.add_argument("--out", help="image path (default: show window)")
    args = ap.parse_args()

    df = pd.read_csv(args.csv, comment="#")
    df = df[df["error"].isna()]
    betas = df["beta_omega1"].unique()

    fig, ax = plt.subplots(figsize=(6, 4))
    if len(betas) == 1:
        series = ["f_q"] + [c for c in df.columns if c.startswith("chi2_")] + ["b0", "b1", "b2"]
        for col in series:
            if col in df and df[col].notna().any():
                ax.plot(df["gt"], df[col], label=col)
        ax.set_xlabel("gt")
        ax.legend()
    else:
        grid = df.pivot(index="beta_omega1", columns="gt", values=args.column)
        vmax = np.nanmax(np.abs(grid.values))
        mesh = ax.pcolormesh(grid.columns, grid.index, grid.values, cmap="RdBu", vmin=-vmax, vmax=vmax, shading="auto")
        ax.contour(grid.columns, grid.index, grid.values, levels=[0.0], colors="k", linestyles="--")
        fig.colorbar(mesh, label=args.column)
        ax.set_xlabel("gt")
        ax.set_ylabel("beta_omega1")
    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
