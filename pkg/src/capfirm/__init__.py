"""capfirm: day-ahead export nominations for a PV + storage plant under
capacity-firming market rules."""

__version__ = "0.1.0"
