"""Four-branch parallel bidirectional LSTM sarcasm classifier, built from
scratch on float64 numpy: corpus tooling, recurrent training with Adam,
metrics, a cross-training benchmark protocol, and a batch CLI."""

__version__ = "0.1.0"
