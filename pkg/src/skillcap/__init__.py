"""Skill capture from first-person-shooter input logs.

Subpackages and modules:

- ``telemetry``: game-log data model, JSON parsing and windowing
- ``metrics``: per-game performance and per-player skill metrics
- ``rating``: TrueSkill updates and bot-range calibration
- ``stats``: Pearson/Spearman correlation and the Mann-Whitney U test
- ``features``: complexity kernels, input features and the feature catalog
- ``forest``: random forests, cross-validation and windowed evaluation
- ``synth``: synthetic logs from player archetypes
- ``cli``: the ``skillcap`` command-line pipeline
"""

__version__ = "0.1.0"
