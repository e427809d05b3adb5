"""Regenerate the frozen golden report for the end-to-end acceptance test.

Run only when an intentional change to the pipeline output is being
pinned; the acceptance suite compares bytes against the file this writes.
"""

from pathlib import Path

import spofe
from spofe.dataio import PipelineConfig, load_csv
from spofe.pipeline import run_pipeline

DEMO_CSV = Path(spofe.__file__).parent / "data" / "demo.csv"
GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_report.json"


def main() -> None:
    config = PipelineConfig(selection="fixed:10")
    data = load_csv(str(DEMO_CSV))
    report = run_pipeline(config, data, input_name="demo.csv")
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(report.to_json())
    print(f"wrote {GOLDEN} ({GOLDEN.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
