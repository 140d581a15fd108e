"""
Pipeline module for rydberg_rbm

Experiment configuration, artifact formats and the CLI commands.
"""
