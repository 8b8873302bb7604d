"""
Command services behind the CLI: rate, gelo, eval, simulate.
"""
