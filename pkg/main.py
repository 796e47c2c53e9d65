"""
main.py
CLI entry point for the SOV-MAS multimodal summarization toolkit.

Usage:
  python main.py synth     --langs 3 --sizes 200,100,50 --out data/synth.jsonl
  python main.py split     --corpus data/synth.jsonl --out data/split.json
  python main.py stats     --corpus data/synth.jsonl
  python main.py train     --corpus data/synth.jsonl --split data/split.json --steps 500 --out runs/desk
  python main.py eval      --checkpoint runs/desk/best.sovm --corpus data/synth.jsonl --split data/split.json
  python main.py gradcheck --precision 64
"""
import sys
from pathlib import Path

# Ensure project root is on sys.path when running directly
sys.path.insert(0, str(Path(__file__).parent))

from cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
