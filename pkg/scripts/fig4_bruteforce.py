#!/usr/bin/env python3
"""Standalone brute-force enumeration of the fig4 fixture.

Hardcodes the model structure and the validity predicate directly, without
importing ovmkit, so its output can be pinned as an independent golden value
for the analysis module. Writes fixtures/golden/fig4_analysis.json.
"""

import itertools
import json
from pathlib import Path

# fig4: per-VP legal local selections.
#   VP1 (internal): alt [1..1] over {V1, V2}
#   VP2 (internal): alt [1..1] over {VC2, VC3}
#   CP1 (external): alt [1..2] over {V3, V4, V5}
#   CP2 (external): mandatory V6
#   CP3 (external): mandatory V7
# Constraints: V1 excludes V3; V2 requires V5; VC2 requires CP2; VC3 requires CP3.

VPS = {
    "VP1": [frozenset({v}) for v in ("V1", "V2")],
    "VP2": [frozenset({v}) for v in ("VC2", "VC3")],
    "CP1": [
        frozenset(c)
        for size in (1, 2)
        for c in itertools.combinations(("V3", "V4", "V5"), size)
    ],
    "CP2": [frozenset({"V6"})],
    "CP3": [frozenset({"V7"})],
}

ALL_VARIANTS = {"V1", "V2", "V3", "V4", "V5", "VC2", "VC3", "V6", "V7"}


def vp_part(config, vp):
    return len(config[vp]) > 0


def valid(config):
    selected = set().union(*config.values())
    if "V1" in selected and "V3" in selected:  # V1 excludes V3
        return False
    if "V2" in selected and "V5" not in selected:  # V2 requires V5
        return False
    if "VC2" in selected and not vp_part(config, "CP2"):  # VC2 requires CP2
        return False
    if "VC3" in selected and not vp_part(config, "CP3"):  # VC3 requires CP3
        return False
    return True


def main():
    names = list(VPS)
    configs = []
    for combo in itertools.product(*(VPS[n] for n in names)):
        config = dict(zip(names, combo))
        if valid(config):
            configs.append(config)

    seen = set().union(*(set().union(*c.values()) for c in configs))
    dead = sorted(ALL_VARIANTS - seen)
    report = {
        "configurations": len(configs),
        "void": len(configs) == 0,
        "dead": dead,
        "mode": "exact",
    }
    out = Path(__file__).resolve().parents[1] / "fixtures" / "golden" / "fig4_analysis.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
    for c in configs:
        print({k: sorted(v) for k, v in c.items()})


if __name__ == "__main__":
    main()
