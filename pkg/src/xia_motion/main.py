from .cli import app


def main() -> None:
    app(prog_name="xia-motion")


if __name__ == "__main__":
    main()
