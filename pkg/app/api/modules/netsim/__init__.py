"""
Discrete-event chain simulation in Store-and-Forward and Compute-and-Forward modes
"""
