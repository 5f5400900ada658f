typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

static int checksum(const char *p, int n) {
  int sum = 0;
  int i;
  for (i = 0; i < n; i++)
    sum = sum + p[i];
  return sum;
}

void process(FILE *f) {
  char src[512];
  char dst[256];
  unsigned int off = 0;
  unsigned int len = 0;
  memset(src, 'o', sizeof(src));
  memset(dst, 0, sizeof(dst));
  fread(&off, sizeof(off), 1, f);
  fread(&len, sizeof(len), 1, f);
  if (off > 256) {
    printf("bad offset\n");
    exit(1);
  }
  if (len > 256 - off) {
    printf("bad length\n");
    exit(1);
  }
  memcpy(dst + off, src, len);
  printf("placed %u at %u sum %d\n", len, off, checksum(dst, 256));
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
