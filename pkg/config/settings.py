"""
config/settings.py
Central process-level configuration: environment variables and .env file.
Run-level hyperparameters live in key=value config files (see config/loader.py).
"""
import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent


class Settings:

    def __init__(self):
        self._load()

    def _load(self):
        from dotenv import load_dotenv
        load_dotenv(BASE_DIR / ".env", override=False)

        # Global seed fallback when a subcommand gets no --seed
        self.seed = int(os.environ.get("SOVMAS_SEED", "0"))

        self.log_level  = os.environ.get("SOVMAS_LOG_LEVEL", "INFO")
        self.output_dir = Path(os.environ.get("SOVMAS_OUTPUT_DIR", str(BASE_DIR / "runs")))
        self.precision  = int(os.environ.get("SOVMAS_PRECISION", "32"))

        # Prometheus textfile dump at the end of each run
        self.write_metrics_file = os.environ.get("SOVMAS_METRICS_FILE", "1") not in ("0", "false", "no")

        # Reserved token ids of the bundled vocabulary format
        self.pad_id   = 0
        self.end_id   = 1
        self.start_id = 2
        self.unk_id   = 3

        # Languages tokenized per character for ROUGE
        self.char_scripted_languages = {
            "zh", "chinese", "ja", "japanese", "my", "burmese", "th", "thai",
        }

    def reload(self) -> None:
        self._load()


settings = Settings()
