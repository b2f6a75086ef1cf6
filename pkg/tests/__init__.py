"""
Test Suite Package for mirrorstate.

Unit tests per package, end-to-end CLI runs in temporary directories, and
long statistical acceptance runs marked `slow`.
"""
