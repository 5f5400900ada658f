typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

extern size_t strlen(const char *s);

void process(FILE *f) {
  char buf[64];
  char dst[64];
  size_t n;
  memset(buf, 0, sizeof(buf));
  memset(dst, 0, sizeof(dst));
  fread(buf, 1, sizeof(buf), f);
  buf[sizeof(buf) - 1] = 0;
  n = strlen(buf);
  memcpy(dst, buf, n);
  printf("copied %d bytes\n", (int)n);
}

int main(int argc, char **argv) {
  FILE *f;
  if (argc < 2)
    return 2;
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  process(f);
  fclose(f);
  return 0;
}
