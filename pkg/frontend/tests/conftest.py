import pytest

AGG_HEADER = (
    "policy,alpha,runs,meanRelativeRevenuePct,stdRelativeRevenuePct,"
    "meanDsCount,stdDsCount,meanAvgZ,stdAvgZ,meanAvgK,stdAvgK,"
    "meanForkStaleBlocks,stdForkStaleBlocks,upperBoundPct"
)

WIN_HEADER = (
    "policy,alpha,gamma,seed,windowIndex,k,z,staleRatePerK,staleRatePerZ,"
    "beta1,beta2,betaK,betaZ,actionK,actionZ,weightDecisions,heightDecisions,"
    "forkStaleBlocks"
)


def _bound(alpha: float) -> float:
    return 100.0 * alpha / (1.0 - alpha)


@pytest.fixture
def aggregate_csv(tmp_path):
    """Experiment-1-shaped aggregate covering all four policies."""
    rows = [AGG_HEADER]
    for i in range(6):
        alpha = round(0.20 + 0.05 * i, 2)
        for policy, rev in (("none", 100 * alpha * 0.8), ("uniform", 100 * alpha * 0.9),
                            ("sdtla", 100 * alpha * 0.4), ("wvbm", 100 * alpha)):
            rows.append(
                f"{policy},{alpha},50,{rev:.6f},1.0,{alpha * 4:.3f},0.5,"
                f"8.0,1.0,2.0,0.5,120.0,10.0,{_bound(alpha):.6f}"
            )
    path = tmp_path / "aggregate.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def single_alpha_csv(tmp_path):
    rows = [AGG_HEADER]
    for policy in ("none", "sdtla", "wvbm"):
        rows.append(f"{policy},0.3,50,25.0,1.0,3.0,0.5,8.0,1.0,,,120.0,10.0,{_bound(0.3):.6f}")
    path = tmp_path / "one.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def windows_csv(tmp_path):
    rows = [WIN_HEADER]
    z, k = 6, 1
    for w in range(16):
        z = min(24, z + 2) if w % 3 else max(3, z - 2)
        k = 1 + (w % 3)
        reset = "" if w == 0 else "1"
        rows.append(f"sdtla,0.35,0.0,42,{w},{k},{z},1.5,0.75,0.6,0.7,{reset},{reset},"
                    f"grow,increase,5,3,12")
    path = tmp_path / "windows.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def wvbm_windows_csv(tmp_path):
    rows = [WIN_HEADER]
    for w in range(10):
        rows.append(f"wvbm,0.3,0.0,7,{w},,{4 + 2 * (w % 3)},,0.5,,,,"
                    f"0,,nochange,1,2,4")
    path = tmp_path / "wvbm_windows.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path
