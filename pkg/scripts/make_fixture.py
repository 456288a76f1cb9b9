#!/usr/bin/env python3
"""
Synthetic Fixture Script

Writes the seeded synthetic hydride database as a JSON-lines store (with CIF
structures) and as a flat CSV, for use as a stand-in dataset.
"""

from pathlib import Path
import argparse
import logging
import sys

from src.dataset import records_to_frame, save_records, synthesize_records
from src.utils.log import configure_logging

logger = logging.getLogger(__name__)


def main() -> int:
    parser = argparse.ArgumentParser(description="Write the synthetic hydride fixture")
    parser.add_argument("--n", type=int, default=450, help="Number of records")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--output", type=Path, default=Path("data/synthetic"))
    args = parser.parse_args()

    configure_logging("INFO")
    records = synthesize_records(args.n, seed=args.seed)

    store = save_records(records, args.output / "records.jsonl")
    frame = records_to_frame(records)
    csv_path = args.output / "records.csv"
    frame.to_csv(csv_path, index=False, float_format="%.10g", lineterminator="\n")

    logger.info(f"Wrote {len(records)} records to {store} and {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
