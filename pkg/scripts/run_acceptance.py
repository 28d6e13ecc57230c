"""Run the acceptance criteria outside pytest and print one line per criterion.

    python3 scripts/run_acceptance.py            # all criteria
    python3 scripts/run_acceptance.py 1 2 7      # a subset
"""
import argparse
import sys

from nlse import acceptance


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("numbers", nargs="*", type=int, default=sorted(acceptance.CRITERIA))
    args = ap.parse_args(argv)
    unknown = set(args.numbers) - set(acceptance.CRITERIA)
    if unknown:
        ap.error(f"no such criteria: {sorted(unknown)}")
    ok = True
    for number in args.numbers:
        outcome = acceptance.run(number)
        print(outcome.line(), flush=True)
        ok &= outcome.ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
