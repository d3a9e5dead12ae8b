"""Benchmark the compiled assembly kernels against the numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--n 64] [--p 3] [--repeat 5]

Times the two hot kernels (volume blocks and interior-face blocks) on the
table sizes a uniform n x n mesh at degree p produces, and the end-to-end
assembly of the paper problem with each backend.
"""

import argparse
import time

import numpy as np

from fluxdg._kernels import available_backends, get_backend
from fluxdg.forms import FormParams
from fluxdg.mesh import build_uniform_quad_mesh
from fluxdg.refelem import make_basis


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_inputs(n, p, rng):
    nq = p + 3
    nb = (p + 1) * (p + 2) // 2
    ne = n * n
    nf = n * (n - 1)
    return {
        "volume": (
            rng.uniform(0.1, 1.0, nq * nq),
            rng.standard_normal((nq * nq, nb)),
            rng.standard_normal((nq * nq, nb, 2)),
            rng.uniform(0.5, 2.0, (ne, nq * nq)),
        ),
        "faces": (
            rng.uniform(0.1, 1.0, nq),
            rng.standard_normal((nq, nb)),
            rng.standard_normal((nq, nb)),
            rng.standard_normal((nq, nb)),
            rng.standard_normal((nq, nb)),
            rng.uniform(0.5, 2.0, (nf, nq)),
            rng.uniform(0.5, 2.0, (nf, nq)),
            0.25,
        ),
    }


def bench_assembly(backend_name, n, p, repeat):
    import fluxdg._kernels as kernels
    from fluxdg.system import assemble, paper_case

    backend = get_backend(backend_name)
    saved = {
        name: getattr(kernels, name)
        for name in (
            "volume_blocks", "load_vectors", "interior_face_blocks",
            "stabilization_face_blocks", "boundary_face_blocks", "flux_gram_blocks",
        )
    }
    for name in saved:
        setattr(kernels, name, getattr(backend, name))
    try:
        case = paper_case()
        mesh = build_uniform_quad_mesh(n)
        basis = make_basis(p)
        params = FormParams(sigma=1.0, p=p)
        return time_call(
            lambda: assemble(mesh, basis, case.coefficient, case.source, params),
            repeat,
        )
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=64, help="elements per side")
    parser.add_argument("--p", type=int, default=3, help="polynomial degree")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    names = available_backends()
    if len(names) < 2:
        print(f"only {names} available; build the extension to compare backends")

    rng = np.random.default_rng(0)
    inputs = kernel_inputs(args.n, args.p, rng)
    contiguous = lambda arrs: tuple(
        np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a for a in arrs
    )

    print(f"mesh {args.n}x{args.n}, degree {args.p} "
          f"(blocks {inputs['volume'][1].shape[1]}^2), best of {args.repeat}")
    header = f"{'kernel':<22}" + "".join(f"{name:>12}" for name in names)
    print(header)
    rows = {
        "volume_blocks": ("volume", "volume_blocks"),
        "interior_face_blocks": ("faces", "interior_face_blocks"),
    }
    timings = {}
    for label, (key, fn_name) in rows.items():
        args_tuple = contiguous(inputs[key])
        line = f"{label:<22}"
        for name in names:
            fn = getattr(get_backend(name), fn_name)
            timings[label, name] = time_call(lambda: fn(*args_tuple), args.repeat)
            line += f"{timings[label, name] * 1e3:>10.2f}ms"
        print(line)

    line = f"{'full assembly':<22}"
    for name in names:
        t = bench_assembly(name, args.n, args.p, args.repeat)
        timings["assembly", name] = t
        line += f"{t * 1e3:>10.2f}ms"
    print(line)

    if len(names) == 2:
        a, b = names
        for label in ("volume_blocks", "interior_face_blocks", "assembly"):
            ratio = timings[label, b] / timings[label, a]
            faster = a if ratio > 1 else b
            print(f"{label}: {faster} is {max(ratio, 1 / ratio):.2f}x faster")


if __name__ == "__main__":
    main()
