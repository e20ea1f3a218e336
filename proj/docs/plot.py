"""Sample plots from potkit CSV artifacts (matplotlib only).

    potkit ladder --out out && potkit disk --out out && potkit bm --d 3 --sweep --out out
    python docs/plot.py out
"""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def col(rows, key):
    return [float(r[key]) for r in rows]


def main(out_dir):
    out = Path(out_dir)
    panels = []
    if (out / "ladder_kato.csv").exists():
        panels.append(("ladder: sup_n E_n[A_t] stays near 1", out / "ladder_kato.csv",
                       lambda ax, rows: (ax.semilogx(col(rows, "t"), col(rows, "sup_exact"), "o-", label="sup exact"),
                                         ax.semilogx(col(rows, "t"), col(rows, "lower_bound"), "x--", label="lower bound"))))
    if (out / "disk_convergence.csv").exists():
        panels.append(("disk: uniform convergence vs Miyadera gap", out / "disk_convergence.csv",
                       lambda ax, rows: (ax.loglog(col(rows, "n"), col(rows, "sup_u_diff"), "o-", label="sup|u_n - u|"),
                                         ax.semilogx(col(rows, "n"), col(rows, "miyadera_lower_bound"), "s-",
                                                     label="d(mu_n, mu_2n) lower"))))
    if (out / "bm_kato_sweep.csv").exists():
        def sweep(ax, rows):
            for key in sorted({(r["d"], r["beta"]) for r in rows}):
                sel = [r for r in rows if (r["d"], r["beta"]) == key and r["divergent"] == "false"]
                if sel:
                    ax.loglog(col(sel, "a"), col(sel, "sup"), "o-", label=f"d={key[0]} beta={key[1]}")
        panels.append(("bm: sup_x I(x, a)", out / "bm_kato_sweep.csv", sweep))
    if not panels:
        sys.exit(f"no known CSV artifacts in {out}")
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    for ax, (title, path, draw) in zip(axes[0], panels):
        draw(ax, read(path))
        ax.set_title(title)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "potkit.png", dpi=120)
    print(out / "potkit.png")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "potkit_out")
