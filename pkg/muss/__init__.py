"""MUSS Select - quality and diversity subset selection toolkit"""

__version__ = "0.1.0"
