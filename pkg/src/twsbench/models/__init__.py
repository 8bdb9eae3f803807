"""Model families: classical baselines and neural sequence models."""
