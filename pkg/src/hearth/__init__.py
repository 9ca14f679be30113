"""Goal-oriented smart home assistant.

Turns loose user commands ("make it cozy in here") into concrete device
settings or trigger/action automation routines by running a language model
through a stepwise reasoning chain, then validates, simulates, and evaluates
the results.
"""

__version__ = "0.1.0"
