"""
GElo rating engine core.

- match_data: match files, datasets and time windows
- elo: classic Elo ratings
- graph/: skill gap graph and weighted random walks
- embedding: Skip-gram player embeddings
- gelo: active-player detection and the GElo adjustment
- evaluation, stats, synthetic: evaluation harness
- pipeline/: stage protocol and the pipeline runner
"""

__version__ = "1.0.0"
