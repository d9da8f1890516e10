# Keeps the repository root on sys.path so tests import `src.*` as the app does.
