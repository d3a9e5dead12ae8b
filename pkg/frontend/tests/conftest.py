import math
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def write_error_csv(path, hs, errors, n0=4):
    """Synthetic error table in the solver CLI's schema, clean rate cells."""
    header = "n,h,dofs,l2_error,h1_error,triple_surrogate,beta_l2,beta_h1,beta_triple"
    lines = [header]
    for i, (h, e) in enumerate(zip(hs, errors)):
        n = n0 * 2**i
        if i == 0:
            betas = ["", "", ""]
        else:
            beta = math.log2(errors[i - 1] / e)
            betas = [f"{beta:.17g}"] * 3
        lines.append(
            f"{n},{h:.17g},{n * n * 6},{e:.17g},{e:.17g},{e:.17g}," + ",".join(betas)
        )
    Path(path).write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def power_law_csv(tmp_path):
    def make(k, name="errors_synth_p9.csv", levels=4):
        hs = [0.25 / 2**i for i in range(levels)]
        return write_error_csv(tmp_path / name, hs, [h**k for h in hs])

    return make
