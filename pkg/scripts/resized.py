"""Identification of area-resized queries through the block-overlap estimate."""

from _common import eval_cli

if __name__ == "__main__":
    eval_cli("resized.manifest", __doc__)
