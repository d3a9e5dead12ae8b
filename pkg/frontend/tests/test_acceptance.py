"""Secondary acceptance: plot fidelity, one PASS/FAIL line per check."""

import time

import pytest

from dgplots.figures import plot_contours, plot_errors


def check(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_plot_fidelity(power_law_csv, fixtures_dir, tmp_path):
    start = time.perf_counter()

    slopes = {}
    for k in (2, 3):
        path = power_law_csv(k, name=f"errors_k{k}_p{k}.csv")
        job = plot_errors([path], tmp_path / f"fidelity{k}.svg")
        slopes[k] = list(job.annotations.values())[0]

    contour = plot_contours(
        fixtures_dir / "grid_paper_p4_n4.csv", tmp_path / "exact.svg",
        column="u_exact",
    )
    center = contour.annotations["center_value"]
    elapsed = time.perf_counter() - start

    check(
        "plot fidelity",
        abs(slopes[2] - 2.0) <= 0.01
        and abs(slopes[3] - 3.0) <= 0.01
        and abs(center - 0.0625) <= 1e-12
        and elapsed < 10.0,
        f"slopes {slopes[2]:.4f}/{slopes[3]:.4f}, center {center:.17g}, "
        f"{elapsed:.2f}s",
    )
