#!/usr/bin/env python3
"""Standalone oracle-equivalence run over a fresh random corpus.

For every generated model and every locally-legal developer binding, checks
that the derived customization model admits exactly the binding-consistent
projections of the source model's enumerated configurations, and that every
derivation error corresponds to an empty consistent set. Exits nonzero on the
first mismatch.

    python scripts/corpus_check.py --models 500 --seed 42
"""

import argparse
import random
import sys
import time

from ovmkit import generate
from ovmkit.analysis import enumerate_configurations, local_choice_count
from ovmkit.derivation import DerivationError, derive


def key(mapping):
    return tuple(sorted((k, tuple(sorted(v))) for k, v in mapping.items()))


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--models", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-variants", type=int, default=12)
    parser.add_argument("--max-constraints", type=int, default=6)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    start = time.perf_counter()
    models = bindings = errors = 0
    while models < args.models:
        m = generate.random_model(rng, args.max_variants, args.max_constraints)
        raw = 1
        for vp in m.vps:
            raw *= local_choice_count(vp)
        if raw > 50_000 or generate.binding_count(m) > 64:
            continue
        models += 1
        src = enumerate_configurations(m)
        internal_ids = [vp.id for vp in m.internal_vps()]
        for binding in generate.valid_bindings(m):
            bindings += 1
            bmap = {vp: set(vs) for vp, vs in binding.choices}
            consistent = [
                c
                for c in src.configurations
                if all(set(c.get(vp)) == bmap[vp] for vp in internal_ids)
            ]
            try:
                cm, _ = derive(m, binding)
            except DerivationError:
                errors += 1
                if consistent:
                    print(f"MISMATCH: derive error with nonempty source set\n{m}", file=sys.stderr)
                    return 1
                continue
            surviving = set(cm.model.vp_ids())
            lhs = {key(c.as_dict()) for c in enumerate_configurations(cm).configurations}
            rhs = {key(c.restrict(surviving).as_dict()) for c in consistent}
            if lhs != rhs:
                print(f"MISMATCH on binding {dict(binding.choices)}\n{m}", file=sys.stderr)
                return 1
    elapsed = time.perf_counter() - start
    print(
        f"ok: {models} models, {bindings} bindings ({errors} contradictory), "
        f"0 mismatches, {elapsed:.1f} s"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
