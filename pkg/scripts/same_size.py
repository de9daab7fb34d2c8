"""Same-size identification: precision and recall per enrollment database."""

from _common import eval_cli

if __name__ == "__main__":
    eval_cli("same_size.manifest", __doc__)
