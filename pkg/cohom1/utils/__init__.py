"""
cohom1 Utilities Package
Configuration, artifact digests, serialization and report formatting.
"""
