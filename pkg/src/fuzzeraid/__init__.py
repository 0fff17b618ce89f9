"""fuzzeraid: group fuzzer crashes by minimized reproducer programs.

The toolkit targets a small built-in language whose interpreter reports
statement traces, edge coverage, and failure fingerprints.  On top of that it
provides signature generation (dynamic slice plus delta-debugged reduction),
signature-based crash grouping, three conventional dedup baselines, corpus
exploration and labeling, and report rendering.
"""

__version__ = "0.1.0"
