typedef unsigned long size_t;
extern int printf(const char *format, ...);
extern void *memcpy(void *dest, const void *src, size_t n);
extern size_t strlen(const char *s);

int main(int argc, char **argv) {
  char buf[256];
  size_t n;
  if (argc < 2)
    return 2;
  n = strlen(argv[1]);
  if (n >= 200) {
    printf("argument too long\n");
    return 1;
  }
  memcpy(buf, argv[1], n + 1);
  printf("argument has %d bytes\n", (int)n);
  return 0;
}
