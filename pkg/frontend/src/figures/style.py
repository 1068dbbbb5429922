"""Pinned plot style: identical CSV input must yield identical image bytes.

Everything that could drift between runs is fixed here: rcParams, figure
geometry, the svg hash salt, and per-policy line styles.  Policies outside
the map get the fallback style.
"""

RC_PARAMS = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "svg.hashsalt": "forksim-figures",
}

POLICY_STYLES = {
    "none": {"color": "#888888", "marker": "s", "label": "longest chain"},
    "uniform": {"color": "#1f77b4", "marker": "^", "label": "uniform tie-breaking"},
    "sdtla": {"color": "#d62728", "marker": "o", "label": "SDTLA"},
    "wvbm": {"color": "#2ca02c", "marker": "D", "label": "WVBM"},
}

FALLBACK_STYLE = {"color": "#9467bd", "marker": "x"}

# Stripped so image bytes do not embed tool versions or timestamps.
PNG_METADATA = {"Software": None}
SVG_METADATA = {"Date": None, "Creator": None}


def policy_style(policy: str) -> dict:
    style = POLICY_STYLES.get(policy)
    if style is None:
        return {**FALLBACK_STYLE, "label": policy}
    return dict(style)
