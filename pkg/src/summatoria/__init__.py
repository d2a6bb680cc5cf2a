"""Exact summatory functions of arithmetic functions and empirical checks of their asymptotics."""

__version__ = "0.1.0"
