"""
Core package for the Wayfinder orchestration engine.
"""
